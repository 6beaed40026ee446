use super::{AssociationTable, ProtocolError};
use crate::ids::{EntityId, UavId};
use crate::world::{Point3, TrainState, UavState};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlightChangePolicy {
    /// Endurance or range fraction at which a replacement is dispatched.
    pub reserve: f64,
    /// Fraction at which the old UAV leaves whether or not it is relieved.
    pub floor: f64,
}

impl Default for FlightChangePolicy {
    fn default() -> Self {
        FlightChangePolicy {
            reserve: 0.10,
            floor: 0.02,
        }
    }
}

pub fn needs_replacement(u: &UavState, p: &FlightChangePolicy) -> bool {
    u.endurance_fraction() <= p.reserve || u.range_fraction() <= p.reserve
}

pub fn at_floor(u: &UavState, p: &FlightChangePolicy) -> bool {
    u.endurance_fraction() <= p.floor || u.range_fraction() <= p.floor
}

/// Nearest grounded, unassigned UAV with more than the reserve left; ties
/// go to the lowest id.
pub fn select_spare<'a>(
    uavs: impl IntoIterator<Item = &'a UavState>,
    assoc: &AssociationTable,
    near: Point3,
    p: &FlightChangePolicy,
) -> Option<UavId> {
    let mut best: Option<(f64, UavId)> = None;
    for u in uavs {
        if u.airborne
            || u.served_train.is_some()
            || assoc.is_inbound(u.id)
            || needs_replacement(u, p)
        {
            continue;
        }
        let d = (u.position - near).horizontal_norm();
        let better = match best {
            None => true,
            Some((bd, bid)) => d < bd || (d == bd && u.id < bid),
        };
        if better {
            best = Some((d, u.id));
        }
    }
    best.map(|(_, id)| id)
}

/// Launches `spare` toward `train` as the replacement for `old`.
pub fn dispatch(assoc: &mut AssociationTable, old: UavId, spare: &mut UavState, train: &TrainState) {
    spare.airborne = true;
    spare.served_train = Some(train.id);
    spare.replacement_inbound = true;
    spare.locked = false;
    assoc.set_pending(old, spare.id);
}

/// Grounds `u` and drops its uplink.
pub fn land(assoc: &mut AssociationTable, u: &mut UavState) {
    u.airborne = false;
    u.served_train = None;
    u.replacement_inbound = false;
    u.locked = false;
    u.velocity = Point3::ZERO;
    assoc.clear_uplink(EntityId::Uav(u.id));
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlightChangeOutcome {
    NotNeeded,
    Waiting,
    Transferred { from: UavId, to: UavId },
    /// The old UAV hit its floor before relief arrived; the train has no
    /// server until the replacement locks.
    ForcedRelease { released: UavId },
}

/// Advances an in-progress flight change by one decision. The hand-over
/// to `new` happens once it is locked on and either the train is at a
/// station or `old` has reached its floor. At the floor without a locked
/// replacement, `old` leaves anyway and the train is unserved until `new`
/// locks.
pub fn flight_change(
    assoc: &mut AssociationTable,
    old: &mut UavState,
    new: &mut UavState,
    train: &TrainState,
    at_station: bool,
    p: &FlightChangePolicy,
) -> Result<FlightChangeOutcome, ProtocolError> {
    if new.served_train != Some(train.id) {
        return Err(ProtocolError::NotInbound {
            uav: new.id,
            train: train.id,
        });
    }
    let old_serving = assoc.server_of(train.id) == Some(old.id);
    if old_serving && !needs_replacement(old, p) {
        return Ok(FlightChangeOutcome::NotNeeded);
    }
    if !old_serving {
        if new.locked {
            assoc.assign(train.id, new.id)?;
            assoc.take_pending(old.id);
            new.replacement_inbound = false;
            return Ok(FlightChangeOutcome::Transferred {
                from: old.id,
                to: new.id,
            });
        }
        return Ok(FlightChangeOutcome::Waiting);
    }
    let floor = at_floor(old, p);
    if new.locked && (at_station || floor) {
        assoc.assign(train.id, new.id)?;
        assoc.take_pending(old.id);
        new.replacement_inbound = false;
        land(assoc, old);
        return Ok(FlightChangeOutcome::Transferred {
            from: old.id,
            to: new.id,
        });
    }
    if floor {
        assoc.release_train(train.id);
        land(assoc, old);
        return Ok(FlightChangeOutcome::ForcedRelease { released: old.id });
    }
    Ok(FlightChangeOutcome::Waiting)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ids::{StationId, TrackId, TrainId};
    use crate::link_protocol::Uplink;
    use crate::world::Direction;

    fn uav(id: u32, frac: f64, airborne: bool) -> UavState {
        UavState {
            id: UavId(id),
            position: Point3::new(f64::from(id) * 100.0, 0.0, 300.0),
            velocity: Point3::ZERO,
            altitude_setpoint: 300.0,
            max_speed: 111.0,
            endurance_ms: (frac * 10_800_000.0) as u64,
            endurance_total_ms: 10_800_000,
            range_remaining: 75_000.0,
            range_total: 75_000.0,
            served_train: None,
            replacement_inbound: false,
            airborne,
            locked: false,
        }
    }

    fn train() -> TrainState {
        TrainState {
            id: TrainId(1),
            track: TrackId(1),
            position: 0.0,
            speed: 0.0,
            direction: Direction::Forward,
            dwell_remaining: 0.0,
            cruise_speed: 80.0,
            stops_at_stations: true,
            last_station: None,
        }
    }

    fn setup(old_frac: f64) -> (AssociationTable, UavState, UavState) {
        let mut a = AssociationTable::new();
        let mut old = uav(1, old_frac, true);
        old.served_train = Some(TrainId(1));
        old.locked = true;
        a.assign(TrainId(1), old.id).unwrap();
        a.set_uplink(old.id.into(), Uplink::Station(StationId(1)));
        let mut new = uav(2, 1.0, false);
        dispatch(&mut a, old.id, &mut new, &train());
        (a, old, new)
    }

    #[test]
    fn fresh_uav_needs_nothing() {
        let p = FlightChangePolicy::default();
        assert!(!needs_replacement(&uav(1, 1.0, true), &p));
        let (mut a, mut old, mut new) = setup(1.0);
        let out = flight_change(&mut a, &mut old, &mut new, &train(), true, &p).unwrap();
        assert_eq!(out, FlightChangeOutcome::NotNeeded);
    }

    #[test]
    fn swap_waits_for_lock_and_station() {
        let p = FlightChangePolicy::default();
        let (mut a, mut old, mut new) = setup(0.09);
        assert_eq!(
            flight_change(&mut a, &mut old, &mut new, &train(), true, &p).unwrap(),
            FlightChangeOutcome::Waiting
        );
        new.locked = true;
        assert_eq!(
            flight_change(&mut a, &mut old, &mut new, &train(), false, &p).unwrap(),
            FlightChangeOutcome::Waiting
        );
        assert_eq!(
            flight_change(&mut a, &mut old, &mut new, &train(), true, &p).unwrap(),
            FlightChangeOutcome::Transferred {
                from: UavId(1),
                to: UavId(2)
            }
        );
        assert_eq!(a.server_of(TrainId(1)), Some(UavId(2)));
        assert!(!old.airborne);
        assert!(!new.replacement_inbound);
        assert_eq!(a.uplink_of(UavId(1).into()), None);
        a.check().unwrap();
    }

    #[test]
    fn floor_forces_the_swap_or_the_release() {
        let p = FlightChangePolicy::default();
        let (mut a, mut old, mut new) = setup(0.015);
        new.locked = true;
        assert!(matches!(
            flight_change(&mut a, &mut old, &mut new, &train(), false, &p).unwrap(),
            FlightChangeOutcome::Transferred { .. }
        ));

        let (mut a, mut old, mut new) = setup(0.015);
        assert_eq!(
            flight_change(&mut a, &mut old, &mut new, &train(), false, &p).unwrap(),
            FlightChangeOutcome::ForcedRelease { released: UavId(1) }
        );
        assert_eq!(a.server_of(TrainId(1)), None);
        assert_eq!(
            flight_change(&mut a, &mut old, &mut new, &train(), false, &p).unwrap(),
            FlightChangeOutcome::Waiting
        );
        new.locked = true;
        assert!(matches!(
            flight_change(&mut a, &mut old, &mut new, &train(), false, &p).unwrap(),
            FlightChangeOutcome::Transferred { .. }
        ));
        assert_eq!(a.server_of(TrainId(1)), Some(UavId(2)));
        assert_eq!(a.pending().count(), 0);
    }

    #[test]
    fn spare_selection() {
        let p = FlightChangePolicy::default();
        let a = AssociationTable::new();
        let spares = [uav(3, 1.0, false), uav(2, 1.0, false), uav(4, 0.05, false), uav(1, 1.0, true)];
        // nearest to x=250: uav2 (200) and uav3 (300) tie, lowest id wins
        assert_eq!(
            select_spare(spares.iter(), &a, Point3::new(250.0, 0.0, 0.0), &p),
            Some(UavId(2))
        );
        assert_eq!(
            select_spare(spares.iter(), &a, Point3::new(310.0, 0.0, 0.0), &p),
            Some(UavId(3))
        );
        assert_eq!(select_spare(spares[2..].iter(), &a, Point3::ZERO, &p), None);
    }
}
