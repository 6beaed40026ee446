//! Protocol state machines: RSSI averaging and A2G handover, UAV
//! association and flight changes, vertical handover at stations, A2A relay
//! failover and store-and-forward buffering.

mod association;
mod buffer;
mod failover;
mod flight_change;
mod handover;
mod params;
mod rssi;
mod vertical;

pub use association::{AssociationTable, Uplink};
pub use buffer::{bytes_per_tick, Drained, RelayBuffer};
pub use failover::{a2a_failover, select_relay, Neighbor};
pub use flight_change::{
    at_floor, dispatch, flight_change, land, needs_replacement, select_spare, FlightChangeOutcome,
    FlightChangePolicy,
};
pub use handover::{
    evaluate_handover, execute_handover, handover_modes, Hard, HandoverDecision, HandoverEvent,
    HandoverExecution, Soft,
};
pub use params::ProtocolParams;
pub use rssi::{update_rssi_window, LinkState, LinkStatus, LinkThresholds, RssiWindow};
pub use vertical::{vertical_handover, StationNetwork, VerticalChange};

use crate::ids::{TrainId, UavId};
use crate::time::SimTime;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProtocolError {
    #[error("RSSI sample at {now} arrived after one at {last}")]
    OutOfOrder { last: SimTime, now: SimTime },
    #[error("{uav} already serves {train}")]
    UavBusy { uav: UavId, train: TrainId },
    #[error("{uav} cannot relay: it is not directly attached to a ground station")]
    BadRelay { uav: UavId },
    #[error("{uav} is not the inbound replacement for {train}")]
    NotInbound { uav: UavId, train: TrainId },
}
