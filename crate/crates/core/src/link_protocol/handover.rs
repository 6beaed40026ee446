use super::{AssociationTable, Uplink};
use crate::ids::{EntityId, StationId};
use crate::registry::Registry;
use crate::time::{Duration, SimTime};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HandoverDecision {
    Stay,
    Handover(StationId),
    /// Serving link is below threshold and nothing qualifies to replace it.
    Interrupt,
}

/// Three-way decision on averaged RSSI. `candidates` excludes the serving
/// station; ties go to the lowest station id.
pub fn evaluate_handover(
    serving_rssi: f64,
    candidates: &[(StationId, f64)],
    threshold_dbm: f64,
    entry_dbm: f64,
) -> HandoverDecision {
    if serving_rssi >= threshold_dbm {
        return HandoverDecision::Stay;
    }
    let mut sorted = candidates.to_vec();
    sorted.sort_by_key(|c| c.0);
    let mut best: Option<(StationId, f64)> = None;
    for (id, rssi) in sorted {
        if rssi >= entry_dbm && best.is_none_or(|(_, b)| rssi > b) {
            best = Some((id, rssi));
        }
    }
    match best {
        Some((id, _)) => HandoverDecision::Handover(id),
        None => HandoverDecision::Interrupt,
    }
}

/// How the switch between stations is carried out.
pub trait HandoverExecution: Send + Sync {
    fn name(&self) -> &'static str;

    /// Ticks after the switch during which no data moves on the link.
    fn gap_ticks(&self, configured: u32) -> u32;
}

/// Make-before-break: the new link is up before the old one is released,
/// and anything in flight waits in the relay buffer.
pub struct Soft;

impl HandoverExecution for Soft {
    fn name(&self) -> &'static str {
        "soft"
    }

    fn gap_ticks(&self, _configured: u32) -> u32 {
        0
    }
}

/// Break-before-make: data offered during the gap is lost.
pub struct Hard;

impl HandoverExecution for Hard {
    fn name(&self) -> &'static str {
        "hard"
    }

    fn gap_ticks(&self, configured: u32) -> u32 {
        configured.max(1)
    }
}

pub fn handover_modes() -> Registry<dyn HandoverExecution> {
    let mut r: Registry<dyn HandoverExecution> = Registry::new("handover mode");
    r.register("soft", || Box::new(Soft))
        .register("hard", || Box::new(Hard));
    r
}

#[derive(Debug, Clone, PartialEq)]
pub struct HandoverEvent {
    pub time: SimTime,
    pub mobile: EntityId,
    pub from: Option<Uplink>,
    pub to: StationId,
    pub mode: &'static str,
    pub gap: Duration,
}

/// Applies a handover decision. Returns `None` (nothing changes) for
/// anything other than a handover to a different station, or when the
/// target no longer qualifies at this instant; the decision is then
/// simply made again next tick.
#[allow(clippy::too_many_arguments)]
pub fn execute_handover(
    assoc: &mut AssociationTable,
    mobile: EntityId,
    decision: HandoverDecision,
    target_qualifies: bool,
    exec: &dyn HandoverExecution,
    hard_gap_ticks: u32,
    dt: Duration,
    now: SimTime,
) -> Option<HandoverEvent> {
    let HandoverDecision::Handover(to) = decision else {
        return None;
    };
    let from = assoc.uplink_of(mobile);
    if from == Some(Uplink::Station(to)) || !target_qualifies {
        return None;
    }
    assoc.set_uplink(mobile, Uplink::Station(to));
    Some(HandoverEvent {
        time: now,
        mobile,
        from,
        to,
        mode: exec.name(),
        gap: Duration::from_millis(dt.millis() * u64::from(exec.gap_ticks(hard_gap_ticks))),
    })
}
