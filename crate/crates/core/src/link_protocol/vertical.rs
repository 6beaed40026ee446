use serde::{Deserialize, Serialize};

use crate::ids::TrackId;
use crate::world::{TrackPath, TrainState};

/// A local network available to trains standing at one station.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StationNetwork {
    pub id: u32,
    pub track: TrackId,
    /// Index into the track's station list (stations sorted by position).
    pub station: usize,
    pub capacity_bps: f64,
    /// One-way latency through the station network, seconds.
    #[serde(default = "default_latency")]
    pub latency_s: f64,
}

fn default_latency() -> f64 {
    0.010
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerticalChange {
    Attach(u32),
    Detach(u32),
}

/// Decides whether the train's user traffic should move onto (or back off)
/// a station network. A train qualifies while within `zone` of the
/// network's station and no faster than `ceiling`; the lowest-id qualifying
/// network is used.
pub fn vertical_handover(
    train: &TrainState,
    track: &TrackPath,
    networks: &[StationNetwork],
    current: Option<u32>,
    zone: f64,
    ceiling: f64,
) -> Option<VerticalChange> {
    let eligible = |n: &StationNetwork| {
        n.track == train.track
            && track
                .stations()
                .get(n.station)
                .is_some_and(|s| (s.position - train.position).abs() <= zone)
            && train.speed <= ceiling
    };
    match current {
        Some(c) => {
            let still = networks.iter().any(|n| n.id == c && eligible(n));
            (!still).then_some(VerticalChange::Detach(c))
        }
        None => networks
            .iter()
            .filter(|n| eligible(n))
            .map(|n| n.id)
            .min()
            .map(VerticalChange::Attach),
    }
}
