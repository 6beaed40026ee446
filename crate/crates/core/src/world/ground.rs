use super::{Point2, Point3, WorldError};
use crate::ids::StationId;

/// Steerable sector antenna. Boresight is a direction vector updated each
/// tick toward whatever the station is serving.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectorBeam {
    pub boresight: Option<Point3>,
    /// Full main-lobe width, degrees.
    pub beamwidth: f64,
    /// dBi
    pub peak_gain: f64,
}

/// A fiber-backhauled ground station (or, in baseline mode, a trackside
/// base station).
#[derive(Debug, Clone, PartialEq)]
pub struct GroundStation {
    pub id: StationId,
    pub position: Point2,
    pub antenna_height: f64,
    /// dBm
    pub tx_power: f64,
    pub beam: SectorBeam,
    pub backhaul: bool,
}

impl GroundStation {
    pub fn new(
        id: StationId,
        position: Point2,
        antenna_height: f64,
        tx_power: f64,
        beamwidth: f64,
        peak_gain: f64,
    ) -> Result<Self, WorldError> {
        if !(beamwidth > 0.0 && beamwidth < 180.0) {
            return Err(WorldError::InvalidBeamwidth(beamwidth));
        }
        if !(peak_gain >= 0.0) {
            return Err(WorldError::InvalidPeakGain(peak_gain));
        }
        Ok(GroundStation {
            id,
            position,
            antenna_height,
            tx_power,
            beam: SectorBeam {
                boresight: None,
                beamwidth,
                peak_gain,
            },
            backhaul: true,
        })
    }

    pub fn antenna(&self) -> Point3 {
        self.position.with_height(self.antenna_height)
    }

    /// Points the sector at `target`.
    pub fn steer_to(&mut self, target: Point3) {
        self.beam.boresight = (target - self.antenna()).unit();
    }
}
