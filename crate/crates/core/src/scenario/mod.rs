//! Scenario file format: TOML sections for the world, channel, protocol,
//! resource, traffic and engine settings, with defaults and validation.

mod validate;

pub use validate::{parse_and_validate, FieldError, ScenarioError, Validated};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::channel::{ChannelParams, TradeoffParams};
use crate::ids::{FlowId, StationId, TrackId, TrainId, UavId};
use crate::link_protocol::{ProtocolParams, StationNetwork};
use crate::time::{secs, Duration};
use crate::world::{Direction, Point2, Station, TrackingParams, TrainKinematics};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    #[default]
    Uasr,
    CellularBaseline,
}

impl Mode {
    pub fn label(self) -> &'static str {
        match self {
            Mode::Uasr => "uasr",
            Mode::CellularBaseline => "cellular-baseline",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default)]
    pub engine: EngineSection,
    pub world: WorldSection,
    #[serde(default)]
    pub radio: RadioParams,
    #[serde(default)]
    pub channel: ChannelParams,
    #[serde(default)]
    pub protocol: ProtocolParams,
    #[serde(default)]
    pub tracking: TrackingParams,
    #[serde(default)]
    pub resource: ResourceSection,
    #[serde(default)]
    pub delay: DelayParams,
    #[serde(default)]
    pub cellular: CellularParams,
    #[serde(default)]
    pub tradeoff: TradeoffParams,
    #[serde(default)]
    pub traffic: TrafficSection,
}

impl Scenario {
    /// Canonical TOML text: every default written out, entity lists in id
    /// order.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario types always serialize")
    }

    /// SHA-256 of the canonical text, hex encoded.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml().as_bytes()))
    }

    pub fn ticks(&self) -> u64 {
        self.engine.end_time.millis() / self.engine.dt.millis()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineSection {
    #[serde(with = "secs")]
    pub dt: Duration,
    #[serde(with = "secs")]
    pub end_time: Duration,
    pub faults: Vec<Fault>,
}

impl Default for EngineSection {
    fn default() -> Self {
        EngineSection {
            dt: Duration::from_millis(100),
            end_time: Duration::from_millis(60_000),
            faults: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FaultKind {
    /// The ground station stops transmitting; all its links are down.
    GsOutage,
    /// Line of sight between a UAV and every ground station is blocked.
    A2gBlockage,
    /// Line of sight between a train and its UAV is blocked.
    A2tBlockage,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fault {
    pub kind: FaultKind,
    /// Station, UAV or train id depending on the kind.
    pub target: u32,
    #[serde(with = "secs")]
    pub start: Duration,
    #[serde(with = "secs")]
    pub duration: Duration,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorldSection {
    /// Warn when UAV parameters leave the reference envelope.
    #[serde(default)]
    pub strict_table1: bool,
    #[serde(default)]
    pub tracks: Vec<TrackSpec>,
    #[serde(default)]
    pub train_kinematics: TrainKinematics,
    #[serde(default)]
    pub trains: Vec<TrainSpec>,
    #[serde(default)]
    pub uav_defaults: UavDefaults,
    #[serde(default)]
    pub uavs: Vec<UavSpec>,
    #[serde(default)]
    pub ground_stations: Vec<GroundStationSpec>,
    #[serde(default)]
    pub station_networks: Vec<StationNetwork>,
}

fn default_labels() -> [String; 2] {
    ["forward".into(), "reverse".into()]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrackSpec {
    pub id: TrackId,
    pub vertices: Vec<Point2>,
    #[serde(default)]
    pub stations: Vec<Station>,
    #[serde(default = "default_labels")]
    pub labels: [String; 2],
}

fn default_cruise() -> f64 {
    300.0 / 3.6
}

fn yes() -> bool {
    true
}

fn default_train_antenna() -> f64 {
    3.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSpec {
    pub id: TrainId,
    pub track: TrackId,
    #[serde(default)]
    pub position: f64,
    /// Initial speed; defaults to the cruise speed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speed: Option<f64>,
    #[serde(default = "default_cruise")]
    pub cruise_speed: f64,
    #[serde(default = "default_direction")]
    pub direction: Direction,
    #[serde(default = "yes")]
    pub stops_at_stations: bool,
    #[serde(default = "default_train_antenna")]
    pub antenna_height: f64,
}

fn default_direction() -> Direction {
    Direction::Forward
}

/// Reference preset applied to every UAV that does not override a value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UavDefaults {
    pub altitude: f64,
    #[serde(with = "secs")]
    pub endurance: Duration,
    pub range_m: f64,
    pub max_speed: f64,
    /// Informational only.
    pub payload_kg: f64,
    /// Informational only.
    pub data_rate_target_bps: f64,
    /// Name of a registered tracking controller.
    pub controller: String,
}

impl Default for UavDefaults {
    fn default() -> Self {
        UavDefaults {
            altitude: 300.0,
            endurance: Duration::from_millis(3 * 3_600_000),
            range_m: 75_000.0,
            max_speed: 111.0,
            payload_kg: 20.0,
            data_rate_target_bps: 1.0e9,
            controller: "matched".into(),
        }
    }
}

mod opt_secs {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::time::Duration;

    pub fn serialize<S: Serializer>(d: &Option<Duration>, s: S) -> Result<S::Ok, S::Error> {
        d.map(|d| d.secs()).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Duration>, D::Error> {
        #[derive(Deserialize)]
        struct W(#[serde(with = "crate::time::secs")] Duration);
        Ok(Option::<W>::deserialize(d)?.map(|w| w.0))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UavSpec {
    pub id: UavId,
    /// Starting horizontal position. A serving UAV without one starts
    /// above its train.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub position: Option<Point2>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub altitude: Option<f64>,
    #[serde(
        default,
        with = "opt_secs",
        skip_serializing_if = "Option::is_none"
    )]
    pub endurance: Option<Duration>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_speed: Option<f64>,
    /// Train served from the start. A UAV serving nothing is a grounded
    /// spare.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub serves: Option<TrainId>,
}

fn d_gs_height() -> f64 {
    30.0
}
fn d_gs_tx() -> f64 {
    30.0
}
fn d_gs_bw() -> f64 {
    30.0
}
fn d_gs_gain() -> f64 {
    17.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroundStationSpec {
    pub id: StationId,
    pub position: Point2,
    #[serde(default = "d_gs_height")]
    pub antenna_height: f64,
    #[serde(default = "d_gs_tx")]
    pub tx_power_dbm: f64,
    #[serde(default = "d_gs_bw")]
    pub beamwidth_deg: f64,
    #[serde(default = "d_gs_gain")]
    pub peak_gain_dbi: f64,
}

/// Antenna and power settings of the airborne and onboard radios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadioParams {
    pub uav_a2g_gain_dbi: f64,
    pub uav_a2t_tx_power_dbm: f64,
    pub uav_a2t_gain_dbi: f64,
    pub uav_a2t_beamwidth_deg: f64,
    pub train_gain_dbi: f64,
    pub uav_a2a_tx_power_dbm: f64,
    pub uav_a2a_gain_dbi: f64,
}

impl Default for RadioParams {
    fn default() -> Self {
        RadioParams {
            uav_a2g_gain_dbi: 6.0,
            uav_a2t_tx_power_dbm: 30.0,
            uav_a2t_gain_dbi: 20.0,
            uav_a2t_beamwidth_deg: 30.0,
            train_gain_dbi: 10.0,
            uav_a2a_tx_power_dbm: 20.0,
            uav_a2a_gain_dbi: 6.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResourceSection {
    /// Name of a registered multiple-access scheme.
    pub access: String,
    #[serde(with = "secs")]
    pub slot: Duration,
}

impl Default for ResourceSection {
    fn default() -> Self {
        ResourceSection {
            access: "tdma".into(),
            slot: Duration::from_millis(10),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DelayParams {
    /// Per forwarding node (UAV, or base station in baseline mode), s.
    pub uav_processing_s: f64,
    pub hst_processing_s: f64,
}

impl Default for DelayParams {
    fn default() -> Self {
        DelayParams {
            uav_processing_s: 0.020,
            hst_processing_s: 0.040,
        }
    }
}

/// Trackside base-station chain used in baseline mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CellularParams {
    pub spacing_m: f64,
    pub lateral_offset_m: f64,
    pub antenna_height: f64,
    pub tx_power_dbm: f64,
    pub gain_dbi: f64,
    pub train_gain_dbi: f64,
    /// Handover threshold; when absent it is the RSSI a train sees halfway
    /// between two base stations.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold_dbm: Option<f64>,
}

impl Default for CellularParams {
    fn default() -> Self {
        CellularParams {
            spacing_m: 3000.0,
            lateral_offset_m: 50.0,
            antenna_height: 30.0,
            tx_power_dbm: 43.0,
            gain_dbi: 15.0,
            train_gain_dbi: 0.0,
            threshold_dbm: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrafficSection {
    pub flows: Vec<FlowSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowClass {
    Control,
    Measurement,
    User,
}

impl FlowClass {
    pub fn label(self) -> &'static str {
        match self {
            FlowClass::Control => "control",
            FlowClass::Measurement => "measurement",
            FlowClass::User => "user",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowSpec {
    pub id: FlowId,
    /// Destination train; traffic runs from the fixed network to it.
    pub train: TrainId,
    pub class: FlowClass,
    pub rate_bps: f64,
    /// Per-tick offered load varies uniformly within +/- this fraction.
    #[serde(default)]
    pub jitter: f64,
}
