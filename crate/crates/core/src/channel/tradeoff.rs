use serde::{Deserialize, Serialize};

use super::ChannelError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TradeoffParams {
    /// SINR of the reference link before scaling, dB.
    pub baseline_sinr_db: f64,
}

impl Default for TradeoffParams {
    fn default() -> Self {
        TradeoffParams {
            baseline_sinr_db: 30.0,
        }
    }
}

/// Transmit-power multiplier needed to carry `rate_ratio` times the
/// reference Shannon rate at `distance_ratio` times the reference distance
/// over a free-space channel.
///
/// With reference SNR `s`, the new link needs SNR `(1 + s)^r - 1`; free-space
/// loss grows with the square of distance, so the power multiplier is
/// `((1 + s)^r - 1) / s * d^2`.
pub fn tradeoff_power_ratio(
    distance_ratio: f64,
    rate_ratio: f64,
    params: &TradeoffParams,
) -> Result<f64, ChannelError> {
    if !(distance_ratio > 0.0) || !(rate_ratio > 0.0) {
        return Err(ChannelError::InvalidRatio {
            distance_ratio,
            rate_ratio,
        });
    }
    let s = 10f64.powf(params.baseline_sinr_db / 10.0);
    let needed = (1.0 + s).powf(rate_ratio) - 1.0;
    Ok(needed / s * distance_ratio * distance_ratio)
}
