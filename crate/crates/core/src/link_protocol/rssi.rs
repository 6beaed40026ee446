use std::collections::VecDeque;
use std::fmt;

use super::ProtocolError;
use crate::channel::ChannelSample;
use crate::ids::EntityId;
use crate::time::{Duration, SimTime};

/// Timestamped RSSI samples covering the most recent update interval.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RssiWindow {
    samples: VecDeque<(SimTime, f64)>,
}

impl RssiWindow {
    /// Appends a sample and evicts those at or before `now - interval`.
    pub fn push(&mut self, now: SimTime, rssi: f64, interval: Duration) -> Result<(), ProtocolError> {
        if let Some(&(last, _)) = self.samples.back() {
            if now < last {
                return Err(ProtocolError::OutOfOrder { last, now });
            }
        }
        self.samples.push_back((now, rssi));
        while let Some(&(t, _)) = self.samples.front() {
            if t.add(interval) <= now {
                self.samples.pop_front();
            } else {
                break;
            }
        }
        Ok(())
    }

    /// Arithmetic mean in dBm; recomputed from the samples each time so no
    /// rounding accumulates.
    pub fn average(&self) -> Option<f64> {
        if self.samples.is_empty() {
            return None;
        }
        let sum: f64 = self.samples.iter().map(|(_, r)| r).sum();
        Some(sum / self.samples.len() as f64)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum LinkStatus {
    Connected,
    /// Usable but below the handover threshold.
    Degraded,
    Interrupted,
    HandoverInProgress,
    Relayed,
}

impl LinkStatus {
    pub fn label(self) -> &'static str {
        match self {
            LinkStatus::Connected => "connected",
            LinkStatus::Degraded => "degraded",
            LinkStatus::Interrupted => "interrupted",
            LinkStatus::HandoverInProgress => "handover",
            LinkStatus::Relayed => "relayed",
        }
    }
}

impl fmt::Display for LinkStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Radio condition of one measured link between a mobile end (UAV, or
/// train in baseline mode) and a fixed station.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkState {
    pub mobile: EntityId,
    pub station: EntityId,
    pub status: LinkStatus,
    pub window: RssiWindow,
    pub averaged_rssi: Option<f64>,
    pub last_sinr: f64,
    pub blocked: bool,
    pub entered: SimTime,
}

/// Thresholds that classify a link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkThresholds {
    pub sensitivity_dbm: f64,
    pub min_sinr_db: f64,
    pub handover_threshold_dbm: f64,
}

impl LinkState {
    pub fn new(mobile: EntityId, station: EntityId, now: SimTime) -> Self {
        LinkState {
            mobile,
            station,
            status: LinkStatus::Interrupted,
            window: RssiWindow::default(),
            averaged_rssi: None,
            last_sinr: f64::NEG_INFINITY,
            blocked: false,
            entered: now,
        }
    }

    /// Interrupted exactly when the averaged RSSI is below sensitivity, the
    /// latest SINR is below the minimum, or line of sight is blocked.
    pub fn interrupted(&self, th: &LinkThresholds) -> bool {
        match self.averaged_rssi {
            None => true,
            Some(avg) => avg < th.sensitivity_dbm || self.last_sinr < th.min_sinr_db || self.blocked,
        }
    }

    fn classify(&self, th: &LinkThresholds) -> LinkStatus {
        if self.interrupted(th) {
            LinkStatus::Interrupted
        } else if self.averaged_rssi.is_some_and(|a| a < th.handover_threshold_dbm) {
            LinkStatus::Degraded
        } else {
            LinkStatus::Connected
        }
    }
}

/// Folds one channel sample into the link's window and reclassifies it.
pub fn update_rssi_window(
    ls: &mut LinkState,
    sample: &ChannelSample,
    now: SimTime,
    interval: Duration,
    th: &LinkThresholds,
) -> Result<(), ProtocolError> {
    ls.window.push(now, sample.rssi, interval)?;
    ls.averaged_rssi = ls.window.average();
    ls.last_sinr = sample.sinr;
    ls.blocked = sample.blocked;
    let status = ls.classify(th);
    if status != ls.status {
        ls.status = status;
        ls.entered = now;
    }
    Ok(())
}
