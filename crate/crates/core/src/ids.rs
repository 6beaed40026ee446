//! Entity identifiers. Every collection in the engine is keyed by these, so
//! iteration order is always ascending id.

use std::fmt;

use serde::{Deserialize, Serialize};

macro_rules! id_type {
    ($(#[$meta:meta])* $name:ident, $prefix:literal) => {
        $(#[$meta])*
        #[derive(
            Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
        )]
        #[serde(transparent)]
        pub struct $name(pub u32);

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, concat!($prefix, "{}"), self.0)
            }
        }
    };
}

id_type!(TrackId, "track");
id_type!(TrainId, "hst");
id_type!(UavId, "uav");
id_type!(
    /// A ground station, or a trackside base station in baseline mode.
    StationId,
    "gs"
);
id_type!(FlowId, "flow");

/// Any radio endpoint that can hold a Walsh code or appear in a record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EntityId {
    Train(TrainId),
    Uav(UavId),
    Station(StationId),
}

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EntityId::Train(id) => id.fmt(f),
            EntityId::Uav(id) => id.fmt(f),
            EntityId::Station(id) => id.fmt(f),
        }
    }
}

impl From<TrainId> for EntityId {
    fn from(id: TrainId) -> Self {
        EntityId::Train(id)
    }
}

impl From<UavId> for EntityId {
    fn from(id: UavId) -> Self {
        EntityId::Uav(id)
    }
}

impl From<StationId> for EntityId {
    fn from(id: StationId) -> Self {
        EntityId::Station(id)
    }
}
