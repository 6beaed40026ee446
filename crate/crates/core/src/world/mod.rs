//! Geometry and mobility: tracks, train kinematics, UAV tracking flight and
//! ground-station placement.

mod geometry;
mod ground;
mod track;
mod train;
mod uav;

pub use geometry::{angle_between_deg, slant_range_and_elevation, Point2, Point3};
pub use ground::{GroundStation, SectorBeam};
pub use track::{Direction, Station, TrackPath};
pub use train::{advance_train, TrainKinematics, TrainState, DEFAULT_MAX_TRAIN_SPEED};
pub use uav::{
    charge_flight, tracking_controllers, uav_tracking_step, MatchedSpeed, ResidualPursuit,
    TrackingController, TrackingParams, UavState,
};

use crate::ids::{TrackId, TrainId, UavId};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum WorldError {
    #[error("track {track}: {reason}")]
    InvalidTrack { track: TrackId, reason: String },
    #[error("unknown track {0}")]
    UnknownTrack(TrackId),
    #[error("coincident points have no defined range or elevation")]
    DegenerateGeometry,
    #[error("time step must be positive")]
    InvalidStep,
    #[error("{uav} is not assigned to {train}")]
    TargetMismatch { uav: UavId, train: TrainId },
    #[error("ground station beamwidth {0} deg outside (0, 180)")]
    InvalidBeamwidth(f64),
    #[error("ground station peak gain {0} dBi is negative")]
    InvalidPeakGain(f64),
}
