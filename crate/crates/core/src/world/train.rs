use serde::{Deserialize, Serialize};

use super::{Direction, Point3, TrackPath, WorldError};
use crate::ids::{TrackId, TrainId};
use crate::time::Duration;

/// 350 km/h, the top of the UAS-R speed band.
pub const DEFAULT_MAX_TRAIN_SPEED: f64 = 350.0 / 3.6;

/// Braking and acceleration limits shared by all trains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainKinematics {
    /// m/s^2
    pub deceleration: f64,
    /// m/s^2
    pub acceleration: f64,
    /// m/s
    pub max_speed: f64,
}

impl Default for TrainKinematics {
    fn default() -> Self {
        TrainKinematics {
            deceleration: 1.0,
            acceleration: 1.0,
            max_speed: DEFAULT_MAX_TRAIN_SPEED,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainState {
    pub id: TrainId,
    pub track: TrackId,
    /// Arc-length position, meters.
    pub position: f64,
    /// m/s, never negative; direction carries the sign.
    pub speed: f64,
    pub direction: Direction,
    /// Seconds left at the current station; 0 while moving.
    pub dwell_remaining: f64,
    /// Speed the train returns to after stations.
    pub cruise_speed: f64,
    pub stops_at_stations: bool,
    /// Station the train most recently stopped at, so it is not stopped at
    /// twice.
    pub last_station: Option<usize>,
}

impl TrainState {
    /// Velocity vector on the track at the current position (z = 0).
    pub fn velocity(&self, track: &TrackPath) -> Point3 {
        let t = track.tangent_at(self.position);
        let v = self.speed * self.direction.sign();
        Point3::new(t.x * v, t.y * v, 0.0)
    }

    /// Position in 3D with the given antenna height.
    pub fn antenna(&self, track: &TrackPath, height: f64) -> Point3 {
        track.point_at(self.position).with_height(height)
    }

    fn at_terminus(&self, track: &TrackPath) -> bool {
        match self.direction {
            Direction::Forward => self.position >= track.length(),
            Direction::Reverse => self.position <= 0.0,
        }
    }
}

/// Integrates one tick of train motion: cruise, constant-deceleration
/// braking into stations, dwell, and re-acceleration.
pub fn advance_train(
    t: &TrainState,
    track: &TrackPath,
    dt: Duration,
    kin: &TrainKinematics,
) -> Result<TrainState, WorldError> {
    if t.track != track.id() {
        return Err(WorldError::UnknownTrack(t.track));
    }
    if dt.millis() == 0 {
        return Err(WorldError::InvalidStep);
    }
    let dt_s = dt.secs();
    let mut next = t.clone();

    if t.dwell_remaining > 0.0 {
        next.speed = 0.0;
        next.dwell_remaining = (t.dwell_remaining - dt_s).max(0.0);
        return Ok(next);
    }
    if t.at_terminus(track) {
        next.speed = 0.0;
        return Ok(next);
    }

    let sign = t.direction.sign();
    let v = t.speed;

    let station = if t.stops_at_stations {
        track.next_station(t.position, t.direction, t.last_station)
    } else {
        None
    };

    if let Some((idx, st)) = station {
        let d = (st.position - t.position).abs();
        if d == 0.0 {
            next.position = st.position;
            next.speed = 0.0;
            next.dwell_remaining = st.dwell;
            next.last_station = Some(idx);
            return Ok(next);
        }
        // Brake once coasting one more tick would leave less than the
        // stopping distance. The required deceleration v^2 / 2d is then at
        // most the configured limit.
        if v > 0.0 && d - v * dt_s < v * v / (2.0 * kin.deceleration) {
            let b = v * v / (2.0 * d);
            let t_stop = v / b;
            if t_stop <= dt_s {
                next.position = st.position;
                next.speed = 0.0;
                next.dwell_remaining = st.dwell;
                next.last_station = Some(idx);
            } else {
                next.speed = v - b * dt_s;
                next.position = t.position + sign * (v * dt_s - 0.5 * b * dt_s * dt_s);
            }
            return Ok(next);
        }
    }

    let target = t.cruise_speed.min(kin.max_speed);
    let v_next = if v < target {
        (v + kin.acceleration * dt_s).min(target)
    } else if v > target {
        (v - kin.deceleration * dt_s).max(target)
    } else {
        v
    };
    let travelled = (v + v_next) / 2.0 * dt_s;
    let s = t.position + sign * travelled;
    next.position = track.clamp(s);
    next.speed = if next.position != s { 0.0 } else { v_next };
    Ok(next)
}
