//! Orthogonal resource allocation: the direction-split frequency plan,
//! Walsh codes, position-prediction beam scheduling and the pluggable
//! multiple-access schemes.

mod access;
mod frequency;
mod schedule;
mod walsh;

pub use access::{
    access_schemes, AccessRequest, AccessScheme, Allocation, Cdma, Grant, SdmaTdma, ServedLink,
    Tdma,
};
pub use frequency::{build_frequency_plan, FreqInterval, FrequencyPlan};
pub use schedule::{predict_position, sdma_beam_step, BeamEntry, BeamSchedule};
pub use walsh::{
    assign_codes, cdma_despread, correlate, inner_product, order_for, spread, walsh_matrix,
    CodeAssignment, WalshMatrix,
};

use crate::ids::{EntityId, TrainId, UavId};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ResourceError {
    #[error("total bandwidth must be positive, got {0} Hz")]
    InvalidBandwidth(f64),
    #[error("Walsh order must be a power of two, got {0}")]
    NotPowerOfTwo(usize),
    #[error("{needed} entities do not fit Walsh order {order}; use a larger order")]
    CodeCapacity { needed: usize, order: usize },
    #[error("no code assigned to {0}")]
    UnknownCode(EntityId),
    #[error("Walsh row {0} does not exist")]
    UnknownRow(usize),
    #[error("composite has {got} chips, code has {expected}")]
    ChipLength { expected: usize, got: usize },
    #[error("{uav} slot {slot} already belongs to {owner}; cannot also serve {other}")]
    SlotConflict {
        uav: UavId,
        slot: u32,
        owner: TrainId,
        other: TrainId,
    },
    #[error("{0} has no band in the frequency plan")]
    UnplannedTrain(TrainId),
}
