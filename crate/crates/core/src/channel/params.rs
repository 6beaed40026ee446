use serde::{Deserialize, Serialize};

use super::{thermal_noise_dbm, ChannelError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum LinkKind {
    /// UAV to ground station.
    A2G,
    /// UAV to train.
    A2T,
    /// UAV to UAV.
    A2A,
    /// Trackside base station to train, baseline mode only.
    Cellular,
}

impl LinkKind {
    pub fn label(self) -> &'static str {
        match self {
            LinkKind::A2G => "a2g",
            LinkKind::A2T => "a2t",
            LinkKind::A2A => "a2a",
            LinkKind::Cellular => "cellular",
        }
    }
}

/// Per-link-kind values (carrier frequency, bandwidth).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerKind {
    pub a2g: f64,
    pub a2t: f64,
    pub a2a: f64,
    pub cellular: f64,
}

impl PerKind {
    pub fn get(&self, kind: LinkKind) -> f64 {
        match kind {
            LinkKind::A2G => self.a2g,
            LinkKind::A2T => self.a2t,
            LinkKind::A2A => self.a2a,
            LinkKind::Cellular => self.cellular,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelParams {
    /// Fixed noise floor in dBm. When absent the floor is thermal noise
    /// over the link bandwidth plus the noise figure.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_floor_dbm: Option<f64>,
    pub noise_figure_db: f64,
    /// Carrier frequency per link kind, Hz.
    pub carrier_hz: PerKind,
    /// Channel bandwidth per link kind, Hz. The A2T entry is the total
    /// shared by both travel directions.
    pub bandwidth_hz: PerKind,
    pub multipath_threshold_deg: f64,
    pub multipath_penalty_db: f64,
    pub min_sinr_db: f64,
    pub receiver_sensitivity_dbm: f64,
    pub sidelobe_gain_dbi: f64,
    /// Fraction of the Shannon bound achieved by the modem, in (0, 1].
    pub spectral_efficiency: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        ChannelParams {
            noise_floor_dbm: None,
            noise_figure_db: 7.0,
            carrier_hz: PerKind {
                a2g: 2.0e9,
                a2t: 30.0e9,
                a2a: 2.4e9,
                cellular: 2.0e9,
            },
            bandwidth_hz: PerKind {
                a2g: 20.0e6,
                a2t: 100.0e6,
                a2a: 20.0e6,
                cellular: 20.0e6,
            },
            multipath_threshold_deg: 10.0,
            multipath_penalty_db: 10.0,
            min_sinr_db: -5.0,
            receiver_sensitivity_dbm: -100.0,
            sidelobe_gain_dbi: -10.0,
            spectral_efficiency: 1.0,
        }
    }
}

impl ChannelParams {
    pub fn noise_floor(&self, bandwidth_hz: f64) -> f64 {
        self.noise_floor_dbm
            .unwrap_or_else(|| thermal_noise_dbm(bandwidth_hz, self.noise_figure_db))
    }

    /// Every violated constraint, as `(field, reason)` pairs.
    pub fn violations(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        if !(self.spectral_efficiency > 0.0 && self.spectral_efficiency <= 1.0) {
            out.push((
                "spectral_efficiency",
                format!("{} outside (0, 1]", self.spectral_efficiency),
            ));
        }
        for (name, v) in [
            ("carrier_hz.a2g", self.carrier_hz.a2g),
            ("carrier_hz.a2t", self.carrier_hz.a2t),
            ("carrier_hz.a2a", self.carrier_hz.a2a),
            ("carrier_hz.cellular", self.carrier_hz.cellular),
            ("bandwidth_hz.a2g", self.bandwidth_hz.a2g),
            ("bandwidth_hz.a2t", self.bandwidth_hz.a2t),
            ("bandwidth_hz.a2a", self.bandwidth_hz.a2a),
            ("bandwidth_hz.cellular", self.bandwidth_hz.cellular),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                out.push((name, format!("must be positive, got {v}")));
            }
        }
        if !(self.multipath_penalty_db >= 0.0) {
            out.push(("multipath_penalty_db", "must be non-negative".into()));
        }
        if !(-90.0..=90.0).contains(&self.multipath_threshold_deg) {
            out.push(("multipath_threshold_deg", "must lie in [-90, 90]".into()));
        }
        out
    }

    pub fn validate(&self) -> Result<(), ChannelError> {
        match self.violations().into_iter().next() {
            None => Ok(()),
            Some((field, reason)) => Err(ChannelError::InvalidParams { field, reason }),
        }
    }
}
