use serde::{Deserialize, Serialize};

use super::{Point3, TrackPath, TrainState, WorldError};
use crate::ids::{TrainId, UavId};
use crate::registry::Registry;
use crate::time::Duration;

#[derive(Debug, Clone, PartialEq)]
pub struct UavState {
    pub id: UavId,
    pub position: Point3,
    pub velocity: Point3,
    pub altitude_setpoint: f64,
    pub max_speed: f64,
    /// Remaining endurance in whole milliseconds so per-tick accounting is
    /// exact.
    pub endurance_ms: u64,
    pub endurance_total_ms: u64,
    /// Remaining flight range, meters.
    pub range_remaining: f64,
    pub range_total: f64,
    /// Train this UAV is tracking, whether as server or inbound
    /// replacement.
    pub served_train: Option<TrainId>,
    pub replacement_inbound: bool,
    pub airborne: bool,
    /// Set once the UAV has closed to within the lock tolerance.
    pub locked: bool,
}

impl UavState {
    pub fn endurance_secs(&self) -> f64 {
        self.endurance_ms as f64 / 1000.0
    }

    pub fn endurance_fraction(&self) -> f64 {
        if self.endurance_total_ms == 0 {
            return 0.0;
        }
        self.endurance_ms as f64 / self.endurance_total_ms as f64
    }

    pub fn range_fraction(&self) -> f64 {
        if self.range_total <= 0.0 {
            return 0.0;
        }
        self.range_remaining / self.range_total
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrackingParams {
    /// Horizontal (and vertical) offset at which the UAV counts as locked.
    pub lock_tolerance: f64,
    /// Proportional gain on the residual offset once locked, 1/s.
    pub gain: f64,
    /// Upper bound on the relative speed the residual controller may
    /// command once locked, m/s.
    pub residual_speed_bound: f64,
}

impl Default for TrackingParams {
    fn default() -> Self {
        TrackingParams {
            lock_tolerance: 10.0,
            gain: 1.0,
            residual_speed_bound: 0.5,
        }
    }
}

/// Control law that keeps a UAV overhead of its train.
pub trait TrackingController: Send + Sync {
    fn name(&self) -> &'static str;

    /// Velocity to fly during the next tick once locked. `target` is the
    /// point the UAV should occupy, `train_velocity` the train's velocity.
    /// Returns the commanded velocity and the position after the tick.
    fn locked_step(
        &self,
        position: Point3,
        target: Point3,
        train_velocity: Point3,
        dt: f64,
        params: &TrackingParams,
    ) -> (Point3, Point3);
}

/// Idealized matched flight: once locked the UAV sits exactly above the
/// train and flies the train's velocity, so there is no relative motion.
#[derive(Debug, Default)]
pub struct MatchedSpeed;

impl TrackingController for MatchedSpeed {
    fn name(&self) -> &'static str {
        "matched"
    }

    fn locked_step(
        &self,
        _position: Point3,
        target: Point3,
        train_velocity: Point3,
        _dt: f64,
        _params: &TrackingParams,
    ) -> (Point3, Point3) {
        (train_velocity, target)
    }
}

/// Proportional correction on top of the train's velocity, with the
/// correction clamped to the residual speed bound.
#[derive(Debug, Default)]
pub struct ResidualPursuit;

impl TrackingController for ResidualPursuit {
    fn name(&self) -> &'static str {
        "residual"
    }

    fn locked_step(
        &self,
        position: Point3,
        target: Point3,
        train_velocity: Point3,
        dt: f64,
        params: &TrackingParams,
    ) -> (Point3, Point3) {
        // Offset at the start of the tick: the target already includes the
        // train's motion over this tick.
        let offset = target - train_velocity * dt - position;
        let mut correction = offset * params.gain;
        let bound = params.residual_speed_bound * (1.0 - 1e-9);
        let n = correction.norm();
        if n > bound {
            correction = correction * (bound / n);
        }
        let v = train_velocity + correction;
        (v, position + v * dt)
    }
}

pub fn tracking_controllers() -> Registry<dyn TrackingController> {
    let mut r: Registry<dyn TrackingController> = Registry::new("tracking controller");
    r.register("matched", || Box::new(MatchedSpeed))
        .register("residual", || Box::new(ResidualPursuit));
    r
}

/// One tick of the tracking controller. The UAV pursues the point above the
/// train at up to its maximum speed, arriving exactly when reachable; once
/// locked the controller's law takes over. Endurance and range are charged
/// for the tick.
pub fn uav_tracking_step(
    u: &UavState,
    target: &TrainState,
    track: &TrackPath,
    dt: Duration,
    params: &TrackingParams,
    controller: &dyn TrackingController,
) -> Result<UavState, WorldError> {
    if u.served_train != Some(target.id) {
        return Err(WorldError::TargetMismatch {
            uav: u.id,
            train: target.id,
        });
    }
    if dt.millis() == 0 {
        return Err(WorldError::InvalidStep);
    }
    let dt_s = dt.secs();
    let aim = track
        .point_at(target.position)
        .with_height(u.altitude_setpoint);
    let train_velocity = target.velocity(track);

    let (velocity, position) = if u.locked {
        controller.locked_step(u.position, aim, train_velocity, dt_s, params)
    } else {
        let to_go = aim - u.position;
        let wanted = to_go * (1.0 / dt_s);
        let speed = wanted.norm();
        if speed <= u.max_speed {
            (wanted, aim)
        } else {
            let v = wanted * (u.max_speed / speed);
            (v, u.position + v * dt_s)
        }
    };

    let offset = aim - position;
    let within = offset.horizontal_norm() <= params.lock_tolerance
        && offset.z.abs() <= params.lock_tolerance;

    let mut next = u.clone();
    next.velocity = velocity;
    next.position = position;
    next.locked = within;
    charge_flight(&mut next, dt, velocity.norm() * dt_s);
    Ok(next)
}

/// Deducts one tick of airborne time and the distance flown.
pub fn charge_flight(u: &mut UavState, dt: Duration, distance: f64) {
    u.endurance_ms = u.endurance_ms.saturating_sub(dt.millis());
    u.range_remaining = (u.range_remaining - distance).max(0.0);
}
