use super::{AssociationTable, Uplink};
use crate::ids::{EntityId, UavId};
use crate::world::UavState;

/// A possible relay and whether its own A2G link is currently healthy.
#[derive(Debug, Clone, Copy)]
pub struct Neighbor<'a> {
    pub uav: &'a UavState,
    pub healthy: bool,
}

/// Nearest airborne, healthy neighbor within `range`; ties go to the
/// lowest id.
pub fn select_relay(failed: &UavState, neighbors: &[Neighbor<'_>], range: f64) -> Option<UavId> {
    let mut best: Option<(f64, UavId)> = None;
    for n in neighbors {
        if n.uav.id == failed.id || !n.healthy || !n.uav.airborne {
            continue;
        }
        let d = (n.uav.position - failed.position).norm();
        if d > range {
            continue;
        }
        if best.is_none_or(|(bd, bid)| d < bd || (d == bd && n.uav.id < bid)) {
            best = Some((d, n.uav.id));
        }
    }
    best.map(|(_, id)| id)
}

/// Routes an interrupted UAV through the nearest qualifying neighbor. With
/// no neighbor the association is left alone and the UAV stays
/// interrupted.
pub fn a2a_failover(
    assoc: &mut AssociationTable,
    failed: &UavState,
    neighbors: &[Neighbor<'_>],
    range: f64,
) -> Option<UavId> {
    let relay = select_relay(failed, neighbors, range)?;
    assoc.set_uplink(EntityId::Uav(failed.id), Uplink::Relay(relay));
    Some(relay)
}
