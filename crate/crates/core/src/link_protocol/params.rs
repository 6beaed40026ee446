use serde::{Deserialize, Serialize};

use crate::time::{secs, Duration};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolParams {
    /// Serving averaged RSSI below which a handover is sought, dBm.
    pub handover_threshold_dbm: f64,
    /// A candidate must reach threshold + hysteresis to be handed to, dB.
    pub entry_hysteresis_db: f64,
    /// Sliding window over which RSSI samples are averaged.
    #[serde(with = "secs")]
    pub update_interval: Duration,
    /// Minimum time between handovers of one link unless it is
    /// interrupted.
    #[serde(with = "secs")]
    pub dwell_guard: Duration,
    /// Name of a registered handover execution strategy.
    pub handover_mode: String,
    /// Ticks during which a break-before-make handover carries no data.
    pub hard_gap_ticks: u32,
    /// Endurance or range fraction at which a replacement is dispatched.
    pub endurance_reserve: f64,
    /// Fraction at which the old UAV must leave regardless.
    pub endurance_floor: f64,
    /// A train within this distance of a station, below the speed ceiling,
    /// counts as at the station.
    pub station_zone_m: f64,
    pub station_speed_ceiling: f64,
    /// Maximum UAV separation for an A2A relay, meters.
    pub a2a_range_m: f64,
    /// Periodic position/obstacle exchange carried on every A2A hop, bit/s.
    pub a2a_control_bps: f64,
    /// Per-train store-and-forward buffer, bytes.
    pub buffer_capacity_bytes: u64,
}

impl Default for ProtocolParams {
    fn default() -> Self {
        ProtocolParams {
            handover_threshold_dbm: -85.0,
            entry_hysteresis_db: 5.0,
            update_interval: Duration::from_millis(250),
            dwell_guard: Duration::from_millis(1000),
            handover_mode: "soft".into(),
            hard_gap_ticks: 1,
            endurance_reserve: 0.10,
            endurance_floor: 0.02,
            station_zone_m: 1000.0,
            station_speed_ceiling: 10.0,
            a2a_range_m: 20_000.0,
            a2a_control_bps: 10_000.0,
            buffer_capacity_bytes: 10_000_000,
        }
    }
}

impl ProtocolParams {
    pub fn entry_threshold_dbm(&self) -> f64 {
        self.handover_threshold_dbm + self.entry_hysteresis_db
    }

    pub fn violations(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        if self.update_interval.millis() == 0 {
            out.push(("update_interval", "must be positive".into()));
        }
        if !(self.entry_hysteresis_db >= 0.0) {
            out.push(("entry_hysteresis_db", "must be non-negative".into()));
        }
        if !(0.0 < self.endurance_floor
            && self.endurance_floor < self.endurance_reserve
            && self.endurance_reserve < 1.0)
        {
            out.push((
                "endurance_reserve",
                format!(
                    "need 0 < floor ({}) < reserve ({}) < 1",
                    self.endurance_floor, self.endurance_reserve
                ),
            ));
        }
        if self.hard_gap_ticks == 0 {
            out.push(("hard_gap_ticks", "must be at least 1".into()));
        }
        for (name, v) in [
            ("station_zone_m", self.station_zone_m),
            ("station_speed_ceiling", self.station_speed_ceiling),
            ("a2a_range_m", self.a2a_range_m),
            ("a2a_control_bps", self.a2a_control_bps),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                out.push((name, format!("must be non-negative, got {v}")));
            }
        }
        out
    }
}
