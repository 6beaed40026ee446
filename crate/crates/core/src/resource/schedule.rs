use std::collections::BTreeMap;

use super::ResourceError;
use crate::ids::{TrainId, UavId};
use crate::time::Duration;
use crate::world::{Direction, Point3, TrackPath, UavState};

/// Linear extrapolation of a train's arc-length position one step ahead
/// from the speed and position it reported, clamped to the track.
pub fn predict_position(
    track: &TrackPath,
    position: f64,
    speed: f64,
    direction: Direction,
    dt: Duration,
) -> f64 {
    debug_assert!(dt.millis() > 0);
    track.clamp(position + direction.sign() * speed * dt.secs())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamEntry {
    pub uav: UavId,
    pub slot: u32,
    pub predicted: Point3,
    pub boresight: Point3,
    pub owner: TrainId,
}

/// Per-slot beam plan. A UAV serves exactly one train in any slot; an
/// insertion that would give a slot a second owner is refused.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BeamSchedule {
    entries: BTreeMap<(UavId, u32), BeamEntry>,
}

impl BeamSchedule {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, e: BeamEntry) -> Result<(), ResourceError> {
        match self.entries.get(&(e.uav, e.slot)) {
            Some(existing) if existing.owner != e.owner => Err(ResourceError::SlotConflict {
                uav: e.uav,
                slot: e.slot,
                owner: existing.owner,
                other: e.owner,
            }),
            _ => {
                self.entries.insert((e.uav, e.slot), e);
                Ok(())
            }
        }
    }

    pub fn get(&self, uav: UavId, slot: u32) -> Option<&BeamEntry> {
        self.entries.get(&(uav, slot))
    }

    pub fn entries(&self) -> impl Iterator<Item = &BeamEntry> {
        self.entries.values()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Number of slots `uav` spends on `train`.
    pub fn slots_for(&self, uav: UavId, train: TrainId) -> usize {
        self.entries
            .range((uav, 0)..=(uav, u32::MAX))
            .filter(|(_, e)| e.owner == train)
            .count()
    }
}

/// Steers `uav`'s beam at the predicted antenna position of the slot owner.
pub fn sdma_beam_step(uav: &UavState, predicted: Point3, slot: u32, owner: TrainId) -> BeamEntry {
    let mut boresight = predicted - uav.position;
    if boresight.norm() == 0.0 {
        boresight = Point3::new(0.0, 0.0, -1.0);
    }
    BeamEntry {
        uav: uav.id,
        slot,
        predicted,
        boresight,
        owner,
    }
}
