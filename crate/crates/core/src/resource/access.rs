use std::collections::BTreeMap;

use super::{
    assign_codes, order_for, BeamEntry, BeamSchedule, CodeAssignment, FreqInterval,
    FrequencyPlan, ResourceError,
};
use crate::ids::{EntityId, TrainId, UavId};
use crate::registry::Registry;
use crate::world::{Direction, Point3};

/// One active UAV-to-train link to be given air-interface resources.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ServedLink {
    pub train: TrainId,
    pub uav: UavId,
    pub direction: Direction,
    pub uav_position: Point3,
    /// Predicted train antenna position for the coming tick.
    pub predicted: Point3,
}

pub struct AccessRequest<'a> {
    pub tick: u64,
    pub slots_per_tick: u32,
    pub plan: &'a FrequencyPlan,
    /// Links in ascending train id order.
    pub links: &'a [ServedLink],
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grant {
    pub train: TrainId,
    pub uav: UavId,
    pub band: FreqInterval,
    /// Fraction of the tick's air time (or code space) this link gets.
    pub share: f64,
    pub code_row: Option<usize>,
    /// UAVs transmitting on the same band at the same time.
    pub co_channel: Vec<UavId>,
    pub boresight: Point3,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Allocation {
    pub grants: BTreeMap<TrainId, Grant>,
    pub schedule: BeamSchedule,
    pub codes: [Option<CodeAssignment>; 2],
}

/// Multiple-access scheme for trains that share a direction sub-band.
pub trait AccessScheme: Send + Sync {
    fn name(&self) -> &'static str;

    fn allocate(&self, req: &AccessRequest<'_>) -> Result<Allocation, ResourceError>;
}

fn groups<'a>(links: &'a [ServedLink]) -> [Vec<&'a ServedLink>; 2] {
    let mut g: [Vec<&ServedLink>; 2] = [Vec::new(), Vec::new()];
    for l in links {
        g[l.direction.index()].push(l);
    }
    for v in &mut g {
        v.sort_by_key(|l| l.train);
    }
    g
}

fn band_of(req: &AccessRequest<'_>, l: &ServedLink) -> Result<FreqInterval, ResourceError> {
    req.plan
        .band(l.train)
        .ok_or(ResourceError::UnplannedTrain(l.train))
}

fn entry(l: &ServedLink, slot: u32) -> BeamEntry {
    let mut boresight = l.predicted - l.uav_position;
    if boresight.norm() == 0.0 {
        boresight = Point3::new(0.0, 0.0, -1.0);
    }
    BeamEntry {
        uav: l.uav,
        slot,
        predicted: l.predicted,
        boresight,
        owner: l.train,
    }
}

/// Same-direction trains take turns, slot by slot, rotating with the tick
/// so remainders are shared fairly. Only one UAV in a sub-band transmits
/// at any instant, so there is no co-channel interference.
pub struct Tdma;

impl AccessScheme for Tdma {
    fn name(&self) -> &'static str {
        "tdma"
    }

    fn allocate(&self, req: &AccessRequest<'_>) -> Result<Allocation, ResourceError> {
        let slots = req.slots_per_tick.max(1);
        let mut out = Allocation::default();
        for group in groups(req.links) {
            let k = group.len() as u64;
            if k == 0 {
                continue;
            }
            let mut owned = vec![0u32; group.len()];
            for slot in 0..slots {
                let i = ((req.tick * u64::from(slots) + u64::from(slot)) % k) as usize;
                owned[i] += 1;
                out.schedule.insert(entry(group[i], slot))?;
            }
            for (l, n) in group.iter().zip(owned) {
                out.grants.insert(
                    l.train,
                    Grant {
                        train: l.train,
                        uav: l.uav,
                        band: band_of(req, l)?,
                        share: f64::from(n) / f64::from(slots),
                        code_row: None,
                        co_channel: Vec::new(),
                        boresight: entry(l, 0).boresight,
                    },
                );
            }
        }
        Ok(out)
    }
}

/// Same-direction trains transmit together, each spread by its own Walsh
/// code. Chips are assumed synchronized, so cross-correlation and hence
/// interference is zero; the code space is divided equally.
pub struct Cdma;

impl AccessScheme for Cdma {
    fn name(&self) -> &'static str {
        "cdma"
    }

    fn allocate(&self, req: &AccessRequest<'_>) -> Result<Allocation, ResourceError> {
        let slots = req.slots_per_tick.max(1);
        let mut out = Allocation::default();
        for (d, group) in groups(req.links).into_iter().enumerate() {
            if group.is_empty() {
                continue;
            }
            let codes = assign_codes(
                group.iter().map(|l| EntityId::Train(l.train)),
                order_for(group.len()),
            )?;
            let share = 1.0 / group.len() as f64;
            for l in &group {
                for slot in 0..slots {
                    out.schedule.insert(entry(l, slot))?;
                }
                out.grants.insert(
                    l.train,
                    Grant {
                        train: l.train,
                        uav: l.uav,
                        band: band_of(req, l)?,
                        share,
                        code_row: codes.row_of(EntityId::Train(l.train)),
                        co_channel: Vec::new(),
                        boresight: entry(l, 0).boresight,
                    },
                );
            }
            out.codes[d] = Some(codes);
        }
        Ok(out)
    }
}

/// Each UAV beams at its own train for the whole tick and reuses the full
/// sub-band; trains are separated only by the UAVs' beams, so every other
/// same-direction UAV is a co-channel interferer.
pub struct SdmaTdma;

impl AccessScheme for SdmaTdma {
    fn name(&self) -> &'static str {
        "sdma-tdma"
    }

    fn allocate(&self, req: &AccessRequest<'_>) -> Result<Allocation, ResourceError> {
        let slots = req.slots_per_tick.max(1);
        let mut out = Allocation::default();
        for group in groups(req.links) {
            for l in &group {
                for slot in 0..slots {
                    out.schedule.insert(entry(l, slot))?;
                }
                let co_channel = group
                    .iter()
                    .filter(|o| o.uav != l.uav)
                    .map(|o| o.uav)
                    .collect();
                out.grants.insert(
                    l.train,
                    Grant {
                        train: l.train,
                        uav: l.uav,
                        band: band_of(req, l)?,
                        share: 1.0,
                        code_row: None,
                        co_channel,
                        boresight: entry(l, 0).boresight,
                    },
                );
            }
        }
        Ok(out)
    }
}

pub fn access_schemes() -> Registry<dyn AccessScheme> {
    let mut r: Registry<dyn AccessScheme> = Registry::new("access scheme");
    r.register("tdma", || Box::new(Tdma))
        .register("cdma", || Box::new(Cdma))
        .register("sdma-tdma", || Box::new(SdmaTdma));
    r
}
