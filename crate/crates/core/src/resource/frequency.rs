use std::collections::BTreeMap;

use super::ResourceError;
use crate::ids::TrainId;
use crate::world::Direction;

/// Half-open frequency interval `[lo, hi)`, Hz offsets within the A2T
/// allocation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreqInterval {
    pub lo: f64,
    pub hi: f64,
}

impl FreqInterval {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn overlaps(&self, other: &FreqInterval) -> bool {
        self.lo < other.hi && other.lo < self.hi
    }

    pub fn contains(&self, other: &FreqInterval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }
}

/// Two equal direction sub-bands; every train transmits only in its
/// direction's half. Trains sharing a direction share the same band and
/// are separated by time or code, never by frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyPlan {
    pub total: f64,
    pub sub_bands: [FreqInterval; 2],
    pub assignments: BTreeMap<TrainId, (Direction, FreqInterval)>,
}

impl FrequencyPlan {
    pub fn band(&self, train: TrainId) -> Option<FreqInterval> {
        self.assignments.get(&train).map(|(_, b)| *b)
    }

    pub fn sub_band(&self, d: Direction) -> FreqInterval {
        self.sub_bands[d.index()]
    }
}

/// Splits `total_bw` in half: the lower half to direction 0, the upper half
/// to direction 1.
pub fn build_frequency_plan(
    total_bw: f64,
    trains: impl IntoIterator<Item = (TrainId, Direction)>,
) -> Result<FrequencyPlan, ResourceError> {
    if !(total_bw > 0.0 && total_bw.is_finite()) {
        return Err(ResourceError::InvalidBandwidth(total_bw));
    }
    let mid = total_bw / 2.0;
    let sub_bands = [
        FreqInterval { lo: 0.0, hi: mid },
        FreqInterval { lo: mid, hi: total_bw },
    ];
    let assignments = trains
        .into_iter()
        .map(|(id, d)| (id, (d, sub_bands[d.index()])))
        .collect();
    Ok(FrequencyPlan {
        total: total_bw,
        sub_bands,
        assignments,
    })
}
