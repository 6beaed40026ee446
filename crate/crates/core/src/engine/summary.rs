use std::collections::BTreeMap;

use super::{EventKind, Record};
use crate::ids::{FlowId, TrainId};
use crate::link_protocol::LinkStatus;
use crate::scenario::{FlowClass, FlowSpec, Mode};
use crate::time::Duration;

/// Running byte and delay counts for one flow.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FlowTally {
    pub offered: u64,
    pub delivered: u64,
    pub dropped: u64,
    pub interrupted_ticks: u64,
    /// One-way delay of every delivery, seconds, in delivery order.
    pub delays: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DelayStats {
    pub count: u64,
    pub mean: f64,
    pub p50: f64,
    pub p95: f64,
    pub p99: f64,
    pub max: f64,
    /// Population standard deviation of the delay.
    pub jitter: f64,
}

/// Nearest-rank percentile of an ascending slice.
pub fn percentile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let rank = ((p / 100.0) * n as f64).ceil() as usize;
    sorted[rank.clamp(1, n) - 1]
}

impl DelayStats {
    pub fn from_samples(samples: &[f64]) -> Option<DelayStats> {
        if samples.is_empty() {
            return None;
        }
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let var = samples.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / n;
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        Some(DelayStats {
            count: samples.len() as u64,
            mean,
            p50: percentile(&sorted, 50.0),
            p95: percentile(&sorted, 95.0),
            p99: percentile(&sorted, 99.0),
            max: sorted[sorted.len() - 1],
            jitter: var.sqrt(),
        })
    }

    /// Round trip taken as twice the one-way mean.
    pub fn rtt(&self) -> f64 {
        2.0 * self.mean
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowSummary {
    pub flow: FlowId,
    pub train: TrainId,
    pub class: FlowClass,
    pub offered: u64,
    pub delivered: u64,
    pub dropped: u64,
    pub buffered: u64,
    pub interrupted_ticks: u64,
    pub throughput_bps: f64,
    pub outage_probability: f64,
    /// Dropped over offered bytes.
    pub per: f64,
    pub delay: Option<DelayStats>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub mode: Mode,
    pub ticks: u64,
    pub duration_s: f64,
    pub flows: Vec<FlowSummary>,
    pub events: BTreeMap<EventKind, u64>,
}

impl Summary {
    pub fn from_tallies<'a>(
        mode: Mode,
        ticks: u64,
        dt: Duration,
        flows: impl IntoIterator<Item = (&'a FlowSpec, &'a FlowTally)>,
        events: &BTreeMap<EventKind, u64>,
    ) -> Summary {
        let duration_s = Duration::from_millis(ticks * dt.millis()).secs();
        let flows = flows
            .into_iter()
            .map(|(spec, t)| FlowSummary {
                flow: spec.id,
                train: spec.train,
                class: spec.class,
                offered: t.offered,
                delivered: t.delivered,
                dropped: t.dropped,
                buffered: t.offered - t.delivered - t.dropped,
                interrupted_ticks: t.interrupted_ticks,
                throughput_bps: if ticks == 0 {
                    0.0
                } else {
                    t.delivered as f64 * 8.0 / duration_s
                },
                outage_probability: if ticks == 0 {
                    0.0
                } else {
                    t.interrupted_ticks as f64 / ticks as f64
                },
                per: if t.offered == 0 {
                    0.0
                } else {
                    t.dropped as f64 / t.offered as f64
                },
                delay: DelayStats::from_samples(&t.delays),
            })
            .collect();
        let mut all: BTreeMap<EventKind, u64> = EventKind::ALL.iter().map(|&k| (k, 0)).collect();
        for (k, n) in events {
            *all.entry(*k).or_default() += n;
        }
        Summary {
            mode,
            ticks,
            duration_s,
            flows,
            events: all,
        }
    }

    /// Recomputes the summary from the record stream alone.
    pub fn fold(
        mode: Mode,
        ticks: u64,
        dt: Duration,
        flows: &[FlowSpec],
        records: &[Record],
    ) -> Summary {
        let mut tallies: BTreeMap<FlowId, FlowTally> =
            flows.iter().map(|f| (f.id, FlowTally::default())).collect();
        let mut events: BTreeMap<EventKind, u64> = BTreeMap::new();
        for r in records {
            match r {
                Record::Flow(f) => {
                    let t = tallies.entry(f.flow).or_default();
                    t.offered += f.offered;
                    t.delivered += f.delivered;
                    t.dropped += f.dropped;
                    if f.status == LinkStatus::Interrupted {
                        t.interrupted_ticks += 1;
                    }
                }
                Record::Delivery(d) => tallies.entry(d.flow).or_default().delays.push(d.delay.total),
                Record::Event(e) => *events.entry(e.kind).or_default() += 1,
                Record::Link(_) => {}
            }
        }
        let mut specs: Vec<&FlowSpec> = flows.iter().collect();
        specs.sort_by_key(|f| f.id);
        Summary::from_tallies(
            mode,
            ticks,
            dt,
            specs.into_iter().map(|s| (s, &tallies[&s.id])),
            &events,
        )
    }

    pub fn event_count(&self, kind: EventKind) -> u64 {
        self.events.get(&kind).copied().unwrap_or(0)
    }

    /// Link-layer handovers: A2G switches in UAS-R mode, base-station
    /// switches in baseline mode.
    pub fn handovers(&self) -> u64 {
        self.event_count(EventKind::A2gHandover) + self.event_count(EventKind::CellularHandover)
    }

    pub fn total_offered(&self) -> u64 {
        self.flows.iter().map(|f| f.offered).sum()
    }

    pub fn total_delivered(&self) -> u64 {
        self.flows.iter().map(|f| f.delivered).sum()
    }

    pub fn total_dropped(&self) -> u64 {
        self.flows.iter().map(|f| f.dropped).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nearest_rank() {
        let s: Vec<f64> = (1..=10).map(f64::from).collect();
        assert_eq!(percentile(&s, 50.0), 5.0);
        assert_eq!(percentile(&s, 95.0), 10.0);
        assert_eq!(percentile(&s, 10.0), 1.0);
        assert_eq!(percentile(&s, 0.0), 1.0);
        assert_eq!(percentile(&[3.0], 99.0), 3.0);
    }

    #[test]
    fn jitter_is_population_std() {
        let d = DelayStats::from_samples(&[1.0, 3.0]).unwrap();
        assert_eq!(d.mean, 2.0);
        assert_eq!(d.jitter, 1.0);
        assert_eq!(d.rtt(), 4.0);
        assert!(DelayStats::from_samples(&[]).is_none());
    }

    #[test]
    fn empty_run_has_zero_counters() {
        let spec = FlowSpec {
            id: FlowId(1),
            train: TrainId(1),
            class: FlowClass::User,
            rate_bps: 1e6,
            jitter: 0.0,
        };
        let s = Summary::fold(Mode::Uasr, 0, Duration::from_millis(100), &[spec], &[]);
        assert_eq!(s.flows[0].offered, 0);
        assert_eq!(s.flows[0].outage_probability, 0.0);
        assert_eq!(s.handovers(), 0);
        assert_eq!(s.events.len(), EventKind::ALL.len());
    }
}
