use std::collections::BTreeMap;
use std::fmt;

use super::ProtocolError;
use crate::ids::{EntityId, StationId, TrainId, UavId};

/// Where a mobile end's traffic enters from the fixed network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Uplink {
    Station(StationId),
    /// Through another UAV's A2G link over an A2A hop.
    Relay(UavId),
}

impl fmt::Display for Uplink {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Uplink::Station(s) => write!(f, "{s}"),
            Uplink::Relay(u) => write!(f, "relay:{u}"),
        }
    }
}

/// Who serves whom. A UAV serves at most one train and a train has at most
/// one serving UAV; an inbound replacement is tracked separately until it
/// takes over.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AssociationTable {
    servers: BTreeMap<TrainId, UavId>,
    uplinks: BTreeMap<EntityId, Uplink>,
    pending: BTreeMap<UavId, UavId>,
}

impl AssociationTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Makes `uav` the server of `train`, returning the previous server.
    pub fn assign(&mut self, train: TrainId, uav: UavId) -> Result<Option<UavId>, ProtocolError> {
        if let Some(other) = self.train_of(uav) {
            if other != train {
                return Err(ProtocolError::UavBusy { uav, train: other });
            }
        }
        Ok(self.servers.insert(train, uav))
    }

    pub fn release_train(&mut self, train: TrainId) -> Option<UavId> {
        self.servers.remove(&train)
    }

    pub fn server_of(&self, train: TrainId) -> Option<UavId> {
        self.servers.get(&train).copied()
    }

    pub fn train_of(&self, uav: UavId) -> Option<TrainId> {
        self.servers
            .iter()
            .find(|(_, &u)| u == uav)
            .map(|(&t, _)| t)
    }

    pub fn servers(&self) -> impl Iterator<Item = (TrainId, UavId)> + '_ {
        self.servers.iter().map(|(t, u)| (*t, *u))
    }

    pub fn set_uplink(&mut self, mobile: EntityId, up: Uplink) -> Option<Uplink> {
        self.uplinks.insert(mobile, up)
    }

    pub fn clear_uplink(&mut self, mobile: EntityId) -> Option<Uplink> {
        self.uplinks.remove(&mobile)
    }

    pub fn uplink_of(&self, mobile: EntityId) -> Option<Uplink> {
        self.uplinks.get(&mobile).copied()
    }

    pub fn set_pending(&mut self, old: UavId, inbound: UavId) {
        self.pending.insert(old, inbound);
    }

    pub fn pending_for(&self, old: UavId) -> Option<UavId> {
        self.pending.get(&old).copied()
    }

    pub fn take_pending(&mut self, old: UavId) -> Option<UavId> {
        self.pending.remove(&old)
    }

    pub fn pending(&self) -> impl Iterator<Item = (UavId, UavId)> + '_ {
        self.pending.iter().map(|(a, b)| (*a, *b))
    }

    pub fn is_inbound(&self, uav: UavId) -> bool {
        self.pending.values().any(|&u| u == uav)
    }

    /// One server per train, one train per UAV, and relays that are
    /// themselves directly attached.
    pub fn check(&self) -> Result<(), ProtocolError> {
        let mut seen: BTreeMap<UavId, TrainId> = BTreeMap::new();
        for (&t, &u) in &self.servers {
            if let Some(&other) = seen.get(&u) {
                return Err(ProtocolError::UavBusy { uav: u, train: other });
            }
            seen.insert(u, t);
        }
        for (&m, &up) in &self.uplinks {
            if let Uplink::Relay(r) = up {
                if m == EntityId::Uav(r) {
                    return Err(ProtocolError::BadRelay { uav: r });
                }
                if !matches!(self.uplink_of(EntityId::Uav(r)), Some(Uplink::Station(_))) {
                    return Err(ProtocolError::BadRelay { uav: r });
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_server_each_way() {
        let mut a = AssociationTable::new();
        assert_eq!(a.assign(TrainId(1), UavId(1)).unwrap(), None);
        assert_eq!(
            a.assign(TrainId(2), UavId(1)),
            Err(ProtocolError::UavBusy {
                uav: UavId(1),
                train: TrainId(1)
            })
        );
        assert_eq!(a.assign(TrainId(1), UavId(2)).unwrap(), Some(UavId(1)));
        assert_eq!(a.server_of(TrainId(1)), Some(UavId(2)));
        assert_eq!(a.train_of(UavId(1)), None);
        a.check().unwrap();
    }

    #[test]
    fn relay_must_be_attached() {
        let mut a = AssociationTable::new();
        a.set_uplink(UavId(1).into(), Uplink::Relay(UavId(2)));
        assert!(a.check().is_err());
        a.set_uplink(UavId(2).into(), Uplink::Station(StationId(1)));
        a.check().unwrap();
        a.set_uplink(UavId(2).into(), Uplink::Relay(UavId(2)));
        assert!(a.check().is_err());
    }

    #[test]
    fn pending_replacements() {
        let mut a = AssociationTable::new();
        a.set_pending(UavId(1), UavId(5));
        assert!(a.is_inbound(UavId(5)));
        assert_eq!(a.take_pending(UavId(1)), Some(UavId(5)));
        assert!(!a.is_inbound(UavId(5)));
    }
}
