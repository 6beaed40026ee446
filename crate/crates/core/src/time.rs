//! Integer simulation time. All clock arithmetic is done in whole
//! milliseconds so tick counts never drift.

use std::fmt;

use serde::{Deserialize, Serialize};

/// A point on the simulation timeline, in milliseconds since start.
#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct SimTime(pub u64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);

    pub fn from_millis(ms: u64) -> Self {
        SimTime(ms)
    }

    pub fn millis(self) -> u64 {
        self.0
    }

    pub fn secs(self) -> f64 {
        self.0 as f64 / 1000.0
    }

    pub fn saturating_sub(self, other: SimTime) -> Duration {
        Duration(self.0.saturating_sub(other.0))
    }

    pub fn add(self, d: Duration) -> SimTime {
        SimTime(self.0 + d.0)
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.3}s", self.secs())
    }
}

/// A span of simulated time in milliseconds.
#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct Duration(pub u64);

impl Duration {
    pub fn from_millis(ms: u64) -> Self {
        Duration(ms)
    }

    /// Converts seconds to whole milliseconds, rejecting values that are not
    /// representable exactly (beyond float noise) or are negative.
    pub fn from_secs_exact(secs: f64) -> Option<Self> {
        if !secs.is_finite() || secs < 0.0 {
            return None;
        }
        let ms = secs * 1000.0;
        let rounded = ms.round();
        if (ms - rounded).abs() > 1e-6 {
            return None;
        }
        Some(Duration(rounded as u64))
    }

    pub fn millis(self) -> u64 {
        self.0
    }

    pub fn secs(self) -> f64 {
        self.0 as f64 / 1000.0
    }
}

/// Serde adapter that writes a [`Duration`] as seconds and reads seconds
/// back, rejecting values that are not whole milliseconds.
pub mod secs {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    use super::Duration;

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.secs())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        let v = f64::deserialize(d)?;
        Duration::from_secs_exact(v).ok_or_else(|| {
            D::Error::custom(format!("{v} s is not a non-negative whole number of milliseconds"))
        })
    }
}
