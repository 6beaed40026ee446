use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::{FaultKind, Mode, Scenario};
use crate::ids::{StationId, TrackId, TrainId, UavId};
use crate::link_protocol::handover_modes;
use crate::resource::access_schemes;
use crate::world::{tracking_controllers, GroundStation, TrackPath};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldError {
    pub path: String,
    pub reason: String,
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.reason)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScenarioError {
    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{} validation error(s):\n{}", .0.len(), list(.0))]
    Invalid(Vec<FieldError>),
}

fn list(errors: &[FieldError]) -> String {
    errors
        .iter()
        .map(|e| format!("  {e}"))
        .collect::<Vec<_>>()
        .join("\n")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Validated {
    pub scenario: Scenario,
    pub warnings: Vec<FieldError>,
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.chars().rev().take_while(|&c| c != '\n').count() + 1;
    (line, column)
}

/// Parses scenario text, fills defaults, sorts entity lists by id and
/// checks every cross-reference and parameter range. All semantic problems
/// are reported together.
pub fn parse_and_validate(text: &str) -> Result<Validated, ScenarioError> {
    let mut sc: Scenario = toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map(|s| line_col(text, s.start)).unwrap_or((0, 0));
        ScenarioError::Syntax {
            line,
            column,
            message: e.message().to_string(),
        }
    })?;
    canonicalize(&mut sc);
    let mut v = Checker::default();
    v.check(&sc);
    if v.errors.is_empty() {
        Ok(Validated {
            scenario: sc,
            warnings: v.warnings,
        })
    } else {
        Err(ScenarioError::Invalid(v.errors))
    }
}

fn canonicalize(sc: &mut Scenario) {
    let w = &mut sc.world;
    w.tracks.sort_by_key(|t| t.id);
    w.trains.sort_by_key(|t| t.id);
    w.uavs.sort_by_key(|u| u.id);
    w.ground_stations.sort_by_key(|g| g.id);
    w.station_networks.sort_by_key(|n| n.id);
    sc.traffic.flows.sort_by_key(|f| f.id);
    sc.engine
        .faults
        .sort_by(|a, b| (a.start, a.kind, a.target).cmp(&(b.start, b.kind, b.target)));
}

#[derive(Default)]
struct Checker {
    errors: Vec<FieldError>,
    warnings: Vec<FieldError>,
}

fn duplicates<T: Ord + Copy>(ids: impl IntoIterator<Item = T>) -> Vec<T> {
    let mut seen = BTreeSet::new();
    let mut dup = BTreeSet::new();
    for id in ids {
        if !seen.insert(id) {
            dup.insert(id);
        }
    }
    dup.into_iter().collect()
}

impl Checker {
    fn err(&mut self, path: impl Into<String>, reason: impl Into<String>) {
        self.errors.push(FieldError {
            path: path.into(),
            reason: reason.into(),
        });
    }

    fn warn(&mut self, path: impl Into<String>, reason: impl Into<String>) {
        self.warnings.push(FieldError {
            path: path.into(),
            reason: reason.into(),
        });
    }

    fn positive(&mut self, path: impl Into<String>, v: f64) {
        if !(v > 0.0 && v.is_finite()) {
            self.err(path, format!("must be positive, got {v}"));
        }
    }

    fn non_negative(&mut self, path: impl Into<String>, v: f64) {
        if !(v >= 0.0 && v.is_finite()) {
            self.err(path, format!("must be non-negative, got {v}"));
        }
    }

    fn check(&mut self, sc: &Scenario) {
        self.engine(sc);
        let tracks = self.tracks(sc);
        self.trains(sc, &tracks);
        self.uavs(sc);
        self.stations(sc, &tracks);
        self.params(sc);
        self.faults(sc);
        self.flows(sc);
    }

    fn engine(&mut self, sc: &Scenario) {
        let e = &sc.engine;
        if e.dt.millis() == 0 {
            self.err("engine.dt", "must be positive");
            return;
        }
        if e.end_time.millis() % e.dt.millis() != 0 {
            self.err(
                "engine.end_time",
                format!(
                    "{} s is not a whole number of {} s ticks",
                    e.end_time.secs(),
                    e.dt.secs()
                ),
            );
        }
        if sc.protocol.update_interval.millis() % e.dt.millis() != 0 {
            self.warn(
                "protocol.update_interval",
                format!(
                    "{} s is not a multiple of dt {} s; the averaging window holds {} samples",
                    sc.protocol.update_interval.secs(),
                    e.dt.secs(),
                    sc.protocol.update_interval.millis().div_ceil(e.dt.millis())
                ),
            );
        }
        let slot = sc.resource.slot.millis();
        if slot == 0 || e.dt.millis() % slot != 0 {
            self.err(
                "resource.slot",
                format!(
                    "slot {} s must be positive and divide dt {} s",
                    sc.resource.slot.secs(),
                    e.dt.secs()
                ),
            );
        }
    }

    fn tracks(&mut self, sc: &Scenario) -> BTreeMap<TrackId, TrackPath> {
        let w = &sc.world;
        for id in duplicates(w.tracks.iter().map(|t| t.id)) {
            self.err("world.tracks", format!("duplicate id {}", id.0));
        }
        let mut out = BTreeMap::new();
        for (i, t) in w.tracks.iter().enumerate() {
            match TrackPath::new(t.id, t.vertices.clone(), t.stations.clone(), t.labels.clone()) {
                Ok(p) => {
                    out.insert(t.id, p);
                }
                Err(e) => self.err(format!("world.tracks[{i}]"), e.to_string()),
            }
        }
        let k = &w.train_kinematics;
        self.positive("world.train_kinematics.deceleration", k.deceleration);
        self.positive("world.train_kinematics.acceleration", k.acceleration);
        self.positive("world.train_kinematics.max_speed", k.max_speed);
        out
    }

    fn trains(&mut self, sc: &Scenario, tracks: &BTreeMap<TrackId, TrackPath>) {
        let w = &sc.world;
        for id in duplicates(w.trains.iter().map(|t| t.id)) {
            self.err("world.trains", format!("duplicate id {}", id.0));
        }
        let vmax = w.train_kinematics.max_speed;
        for (i, t) in w.trains.iter().enumerate() {
            let p = format!("world.trains[{i}]");
            match tracks.get(&t.track) {
                None => self.err(
                    format!("{p}.track"),
                    format!("unknown track {}", t.track.0),
                ),
                Some(tp) => {
                    if !(0.0..=tp.length()).contains(&t.position) {
                        self.err(
                            format!("{p}.position"),
                            format!("{} m outside track [0, {}] m", t.position, tp.length()),
                        );
                    }
                }
            }
            if !(0.0..=vmax).contains(&t.cruise_speed) {
                self.err(
                    format!("{p}.cruise_speed"),
                    format!("{} m/s outside [0, {vmax}] m/s", t.cruise_speed),
                );
            }
            if let Some(s) = t.speed {
                if !(0.0..=vmax).contains(&s) {
                    self.err(
                        format!("{p}.speed"),
                        format!("{s} m/s outside [0, {vmax}] m/s"),
                    );
                }
            }
            self.non_negative(format!("{p}.antenna_height"), t.antenna_height);
        }
    }

    fn uavs(&mut self, sc: &Scenario) {
        let w = &sc.world;
        let d = &w.uav_defaults;
        if !tracking_controllers().contains(&d.controller) {
            let known: Vec<_> = tracking_controllers().names().collect();
            self.err(
                "world.uav_defaults.controller",
                format!("unknown controller `{}` (known: {})", d.controller, known.join(", ")),
            );
        }
        for id in duplicates(w.uavs.iter().map(|u| u.id)) {
            self.err("world.uavs", format!("duplicate id {}", id.0));
        }
        let trains: BTreeSet<TrainId> = w.trains.iter().map(|t| t.id).collect();
        let mut served: BTreeMap<TrainId, UavId> = BTreeMap::new();
        for (i, u) in w.uavs.iter().enumerate() {
            let p = format!("world.uavs[{i}]");
            if let Some(t) = u.serves {
                if !trains.contains(&t) {
                    self.err(format!("{p}.serves"), format!("unknown train {}", t.0));
                } else if let Some(other) = served.insert(t, u.id) {
                    self.err(
                        format!("{p}.serves"),
                        format!("train {} is already served by uav {}", t.0, other.0),
                    );
                }
            } else if u.position.is_none() {
                self.err(
                    format!("{p}.position"),
                    "a spare UAV needs a base position",
                );
            }
            let alt = u.altitude.unwrap_or(d.altitude);
            let end = u.endurance.unwrap_or(d.endurance);
            let range = u.range_m.unwrap_or(d.range_m);
            let vmax = u.max_speed.unwrap_or(d.max_speed);
            self.positive(format!("{p}.altitude"), alt);
            if end.millis() == 0 {
                self.err(format!("{p}.endurance"), "must be positive");
            }
            self.positive(format!("{p}.range_m"), range);
            self.positive(format!("{p}.max_speed"), vmax);
            if w.strict_table1 {
                if !(100.0..=500.0).contains(&alt) {
                    self.warn(
                        format!("{p}.altitude"),
                        format!("{alt} m outside the reference UAV range 100-500 m"),
                    );
                }
                if !(3_600_000..=18_000_000).contains(&end.millis()) {
                    self.warn(
                        format!("{p}.endurance"),
                        format!("{} s outside the reference range 1-5 h", end.secs()),
                    );
                }
                if !(50_000.0..=100_000.0).contains(&range) {
                    self.warn(
                        format!("{p}.range_m"),
                        format!("{range} m outside the reference range 50-100 km"),
                    );
                }
            }
        }
        if w.strict_table1 {
            let a = d.altitude;
            if !(100.0..=500.0).contains(&a) {
                self.warn(
                    "world.uav_defaults.altitude",
                    format!("{a} m outside the reference UAV range 100-500 m"),
                );
            }
        }
        if sc.mode == Mode::Uasr {
            for t in &w.trains {
                if !served.contains_key(&t.id) {
                    self.warn(
                        "world.uavs",
                        format!("train {} has no serving UAV at start", t.id.0),
                    );
                }
            }
        }
    }

    fn stations(&mut self, sc: &Scenario, tracks: &BTreeMap<TrackId, TrackPath>) {
        let w = &sc.world;
        for id in duplicates(w.ground_stations.iter().map(|g| g.id)) {
            self.err("world.ground_stations", format!("duplicate id {}", id.0));
        }
        for (i, g) in w.ground_stations.iter().enumerate() {
            let p = format!("world.ground_stations[{i}]");
            if let Err(e) = GroundStation::new(
                g.id,
                g.position,
                g.antenna_height,
                g.tx_power_dbm,
                g.beamwidth_deg,
                g.peak_gain_dbi,
            ) {
                let field = match e {
                    crate::world::WorldError::InvalidBeamwidth(_) => "beamwidth_deg",
                    _ => "peak_gain_dbi",
                };
                self.err(format!("{p}.{field}"), e.to_string());
            }
            self.non_negative(format!("{p}.antenna_height"), g.antenna_height);
        }
        for id in duplicates(w.station_networks.iter().map(|n| n.id)) {
            self.err("world.station_networks", format!("duplicate id {id}"));
        }
        for (i, n) in w.station_networks.iter().enumerate() {
            let p = format!("world.station_networks[{i}]");
            match tracks.get(&n.track) {
                None => self.err(format!("{p}.track"), format!("unknown track {}", n.track.0)),
                Some(t) if n.station >= t.stations().len() => self.err(
                    format!("{p}.station"),
                    format!("track {} has {} station(s)", n.track.0, t.stations().len()),
                ),
                Some(_) => {}
            }
            self.positive(format!("{p}.capacity_bps"), n.capacity_bps);
            self.non_negative(format!("{p}.latency_s"), n.latency_s);
        }
    }

    fn params(&mut self, sc: &Scenario) {
        for (f, r) in sc.channel.violations() {
            self.err(format!("channel.{f}"), r);
        }
        for (f, r) in sc.protocol.violations() {
            self.err(format!("protocol.{f}"), r);
        }
        if !(sc.channel.receiver_sensitivity_dbm < sc.protocol.handover_threshold_dbm) {
            self.err(
                "protocol.handover_threshold_dbm",
                format!(
                    "threshold {} dBm must be above the receiver sensitivity {} dBm",
                    sc.protocol.handover_threshold_dbm, sc.channel.receiver_sensitivity_dbm
                ),
            );
        }
        let modes = handover_modes();
        if !modes.contains(&sc.protocol.handover_mode) {
            let known: Vec<_> = modes.names().collect();
            self.err(
                "protocol.handover_mode",
                format!("unknown mode `{}` (known: {})", sc.protocol.handover_mode, known.join(", ")),
            );
        }
        let schemes = access_schemes();
        if !schemes.contains(&sc.resource.access) {
            let known: Vec<_> = schemes.names().collect();
            self.err(
                "resource.access",
                format!("unknown scheme `{}` (known: {})", sc.resource.access, known.join(", ")),
            );
        }
        let t = &sc.tracking;
        self.positive("tracking.lock_tolerance", t.lock_tolerance);
        self.non_negative("tracking.gain", t.gain);
        self.non_negative("tracking.residual_speed_bound", t.residual_speed_bound);
        self.non_negative("delay.uav_processing_s", sc.delay.uav_processing_s);
        self.non_negative("delay.hst_processing_s", sc.delay.hst_processing_s);
        let r = &sc.radio;
        if !(r.uav_a2t_beamwidth_deg > 0.0 && r.uav_a2t_beamwidth_deg < 180.0) {
            self.err(
                "radio.uav_a2t_beamwidth_deg",
                format!("{} outside (0, 180)", r.uav_a2t_beamwidth_deg),
            );
        }
        if sc.mode == Mode::CellularBaseline {
            self.positive("cellular.spacing_m", sc.cellular.spacing_m);
            self.non_negative("cellular.antenna_height", sc.cellular.antenna_height);
            if sc.world.tracks.is_empty() {
                self.err("world.tracks", "baseline mode needs a track to line with base stations");
            }
        }
    }

    fn faults(&mut self, sc: &Scenario) {
        let w = &sc.world;
        let gs: BTreeSet<StationId> = w.ground_stations.iter().map(|g| g.id).collect();
        let uavs: BTreeSet<UavId> = w.uavs.iter().map(|u| u.id).collect();
        let trains: BTreeSet<TrainId> = w.trains.iter().map(|t| t.id).collect();
        for (i, f) in sc.engine.faults.iter().enumerate() {
            let p = format!("engine.faults[{i}]");
            let known = match f.kind {
                FaultKind::GsOutage => gs.contains(&StationId(f.target)),
                FaultKind::A2gBlockage => uavs.contains(&UavId(f.target)),
                FaultKind::A2tBlockage => trains.contains(&TrainId(f.target)),
            };
            if !known {
                self.err(format!("{p}.target"), format!("no {:?} target {}", f.kind, f.target));
            }
            if f.duration.millis() == 0 {
                self.err(format!("{p}.duration"), "must be positive");
            }
        }
    }

    fn flows(&mut self, sc: &Scenario) {
        let trains: BTreeSet<TrainId> = sc.world.trains.iter().map(|t| t.id).collect();
        for id in duplicates(sc.traffic.flows.iter().map(|f| f.id)) {
            self.err("traffic.flows", format!("duplicate id {}", id.0));
        }
        for (i, f) in sc.traffic.flows.iter().enumerate() {
            let p = format!("traffic.flows[{i}]");
            if !trains.contains(&f.train) {
                self.err(format!("{p}.train"), format!("unknown train {}", f.train.0));
            }
            self.non_negative(format!("{p}.rate_bps"), f.rate_bps);
            if !(0.0..1.0).contains(&f.jitter) {
                self.err(format!("{p}.jitter"), format!("{} outside [0, 1)", f.jitter));
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[[world.tracks]]
id = 1
vertices = [[0, 0], [10000, 0]]

[[world.trains]]
id = 1
track = 1

[[world.uavs]]
id = 1
serves = 1

[[world.ground_stations]]
id = 1
position = [0, 1000]
"#;

    #[test]
    fn minimal_scenario_gets_defaults() {
        let v = parse_and_validate(MINIMAL).unwrap();
        let sc = &v.scenario;
        // The default update interval is not a multiple of the default tick.
        assert_eq!(v.warnings.len(), 1, "{:?}", v.warnings);
        assert_eq!(v.warnings[0].path, "protocol.update_interval");
        assert_eq!(sc.world.uav_defaults.altitude, 300.0);
        assert_eq!(sc.world.uav_defaults.endurance.millis(), 3 * 3_600_000);
        assert_eq!(sc.world.uav_defaults.range_m, 75_000.0);
        assert_eq!(sc.engine.dt.millis(), 100);
        assert_eq!(sc.protocol.update_interval.millis(), 250);
        assert_eq!(sc.resource.access, "tdma");
        assert_eq!(sc.mode, Mode::Uasr);
    }

    #[test]
    fn round_trip() {
        let sc = parse_and_validate(MINIMAL).unwrap().scenario;
        let again = parse_and_validate(&sc.to_toml()).unwrap().scenario;
        assert_eq!(sc, again);
        assert_eq!(sc.digest(), again.digest());
    }

    #[test]
    fn dangling_track_names_the_field() {
        let text = MINIMAL.replace("track = 1", "track = 9");
        let ScenarioError::Invalid(errs) = parse_and_validate(&text).unwrap_err() else {
            panic!("expected validation errors");
        };
        assert!(errs.iter().any(|e| e.path == "world.trains[0].track" && e.reason.contains("9")));
    }

    #[test]
    fn all_errors_reported_together() {
        let text = format!(
            "{MINIMAL}\n[[traffic.flows]]\nid = 1\ntrain = 4\nclass = \"user\"\nrate_bps = -1\n"
        )
        .replace("track = 1", "track = 9");
        let ScenarioError::Invalid(errs) = parse_and_validate(&text).unwrap_err() else {
            panic!("expected validation errors");
        };
        let paths: Vec<_> = errs.iter().map(|e| e.path.as_str()).collect();
        assert!(paths.contains(&"world.trains[0].track"));
        assert!(paths.contains(&"traffic.flows[0].train"));
        assert!(paths.contains(&"traffic.flows[0].rate_bps"));
    }

    #[test]
    fn strict_table1_warns_on_low_altitude() {
        let text = format!("[world]\nstrict_table1 = true\n{MINIMAL}\n[engine]\ndt = 0.05\n")
            .replace("serves = 1", "serves = 1\naltitude = 50");
        let v = parse_and_validate(&text).unwrap();
        assert_eq!(v.warnings.len(), 1, "{:?}", v.warnings);
        assert_eq!(v.warnings[0].path, "world.uavs[0].altitude");
        assert!(v.warnings[0].reason.contains("100-500 m"));
        let text = text.replace("strict_table1 = true", "strict_table1 = false");
        assert!(parse_and_validate(&text).unwrap().warnings.is_empty());
    }

    #[test]
    fn syntax_error_has_line_and_column() {
        let err = parse_and_validate("[engine]\ndt = = 3\n").unwrap_err();
        match err {
            ScenarioError::Syntax { line, column, .. } => {
                assert_eq!(line, 2);
                assert!(column >= 5, "column {column}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_strategy_lists_known_ones() {
        let text = format!("{MINIMAL}\n[resource]\naccess = \"fdma\"\n");
        let ScenarioError::Invalid(errs) = parse_and_validate(&text).unwrap_err() else {
            panic!();
        };
        assert!(errs[0].reason.contains("cdma, sdma-tdma, tdma"), "{}", errs[0]);
    }

    #[test]
    fn permuted_entities_give_the_same_digest() {
        let a = format!("{MINIMAL}\n[[world.ground_stations]]\nid = 2\nposition = [5000, 1000]\n");
        let b = MINIMAL.replace(
            "[[world.ground_stations]]\nid = 1",
            "[[world.ground_stations]]\nid = 2\nposition = [5000, 1000]\n\n[[world.ground_stations]]\nid = 1",
        );
        let da = parse_and_validate(&a).unwrap().scenario.digest();
        let db = parse_and_validate(&b).unwrap().scenario.digest();
        assert_eq!(da, db);
        let c = a.replace("[5000, 1000]", "[5000, 1001]");
        assert_ne!(da, parse_and_validate(&c).unwrap().scenario.digest());
    }

    #[test]
    fn non_millisecond_times_are_rejected() {
        let text = format!("{MINIMAL}\n[engine]\ndt = 0.0001\n");
        assert!(matches!(parse_and_validate(&text), Err(ScenarioError::Syntax { .. })));
    }
}
