//! Radio link models: free-space loss, sector beam gain, low-elevation
//! multipath, Doppler, RSSI/SINR composition and Shannon capacity.

mod models;
mod params;
mod sample;
mod tradeoff;

pub use models::{
    beam_gain, db_sum, dbm_to_mw, doppler_shift, fspl_db, multipath_penalty, mw_to_dbm,
    shannon_capacity, thermal_noise_dbm, SPEED_OF_LIGHT, THERMAL_NOISE_DBM_PER_HZ,
};
pub use params::{ChannelParams, LinkKind, PerKind};
pub use sample::{sample_link, Antenna, ChannelSample, RadioEnd};
pub use tradeoff::{tradeoff_power_ratio, TradeoffParams};

use crate::world::WorldError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ChannelError {
    #[error("path loss needs positive range and frequency (got {range} m, {frequency} Hz)")]
    Domain { range: f64, frequency: f64 },
    #[error(transparent)]
    Geometry(#[from] WorldError),
    #[error("trade-off ratios must be positive (distance {distance_ratio}, rate {rate_ratio})")]
    InvalidRatio { distance_ratio: f64, rate_ratio: f64 },
    #[error("channel parameter {field}: {reason}")]
    InvalidParams { field: &'static str, reason: String },
}
