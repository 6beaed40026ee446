use std::fmt::Write;

use super::DelayBudget;
use crate::channel::LinkKind;
use crate::ids::{EntityId, FlowId, TrainId};
use crate::link_protocol::LinkStatus;
use crate::scenario::FlowClass;
use crate::time::SimTime;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EventKind {
    Attach,
    A2gHandover,
    CellularHandover,
    Interrupted,
    Failover,
    Restore,
    FlightChangeDispatch,
    FlightChange,
    ForcedRelease,
    NoSpare,
    VerticalAttach,
    VerticalDetach,
}

impl EventKind {
    pub const ALL: [EventKind; 12] = [
        EventKind::Attach,
        EventKind::A2gHandover,
        EventKind::CellularHandover,
        EventKind::Interrupted,
        EventKind::Failover,
        EventKind::Restore,
        EventKind::FlightChangeDispatch,
        EventKind::FlightChange,
        EventKind::ForcedRelease,
        EventKind::NoSpare,
        EventKind::VerticalAttach,
        EventKind::VerticalDetach,
    ];

    pub fn label(self) -> &'static str {
        match self {
            EventKind::Attach => "attach",
            EventKind::A2gHandover => "a2g_handover",
            EventKind::CellularHandover => "cellular_handover",
            EventKind::Interrupted => "interrupted",
            EventKind::Failover => "failover",
            EventKind::Restore => "restore",
            EventKind::FlightChangeDispatch => "flight_change_dispatch",
            EventKind::FlightChange => "flight_change",
            EventKind::ForcedRelease => "forced_release",
            EventKind::NoSpare => "no_spare",
            EventKind::VerticalAttach => "vertical_attach",
            EventKind::VerticalDetach => "vertical_detach",
        }
    }
}

/// How a train's traffic reaches it this tick.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    Direct,
    Relayed,
    StationNetwork,
    Cellular,
    None,
}

impl Route {
    pub fn label(self) -> &'static str {
        match self {
            Route::Direct => "direct",
            Route::Relayed => "relayed",
            Route::StationNetwork => "station_network",
            Route::Cellular => "cellular",
            Route::None => "none",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkRecord {
    pub time: SimTime,
    pub kind: LinkKind,
    pub mobile: EntityId,
    pub peer: EntityId,
    pub status: LinkStatus,
    pub rssi: f64,
    pub avg_rssi: Option<f64>,
    pub sinr: f64,
    /// Usable rate after the access scheme's share, bit/s.
    pub capacity: f64,
    pub doppler: f64,
    pub range: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowRecord {
    pub time: SimTime,
    pub flow: FlowId,
    pub train: TrainId,
    pub class: FlowClass,
    pub status: LinkStatus,
    pub route: Route,
    pub offered: u64,
    pub delivered: u64,
    pub dropped: u64,
    /// Bytes of this flow still queued after the tick.
    pub buffered: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventRecord {
    pub time: SimTime,
    pub kind: EventKind,
    pub subject: EntityId,
    pub from: Option<String>,
    pub to: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeliveryRecord {
    pub time: SimTime,
    pub flow: FlowId,
    pub train: TrainId,
    pub bytes: u64,
    /// Sum of the hop ranges, meters.
    pub path_range: f64,
    pub delay: DelayBudget,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Record {
    Link(LinkRecord),
    Flow(FlowRecord),
    Event(EventRecord),
    Delivery(DeliveryRecord),
}

pub const RECORD_SCHEMA_VERSION: u32 = 1;

pub const CSV_COLUMNS: [&str; 23] = [
    "time_s",
    "record",
    "kind",
    "subject",
    "peer",
    "status",
    "detail",
    "rssi_dbm",
    "avg_rssi_dbm",
    "sinr_db",
    "capacity_bps",
    "doppler_hz",
    "range_m",
    "offered_bytes",
    "delivered_bytes",
    "dropped_bytes",
    "buffered_bytes",
    "propagation_s",
    "processing_s",
    "hst_processing_s",
    "network_s",
    "queuing_s",
    "delay_s",
];

pub fn csv_header() -> String {
    CSV_COLUMNS.join(",")
}

/// Six decimals, with negative zero folded into zero.
fn num(out: &mut String, v: f64) {
    let _ = write!(out, "{:.6}", v + 0.0);
}

impl Record {
    pub fn time(&self) -> SimTime {
        match self {
            Record::Link(r) => r.time,
            Record::Flow(r) => r.time,
            Record::Event(r) => r.time,
            Record::Delivery(r) => r.time,
        }
    }

    /// One CSV line (no newline) in [`CSV_COLUMNS`] order; fields that do
    /// not apply to the record type are empty.
    pub fn csv_line(&self) -> String {
        let mut s = String::with_capacity(160);
        num(&mut s, self.time().secs());
        match self {
            Record::Link(r) => {
                let _ = write!(
                    s,
                    ",link,{},{},{},{},,",
                    r.kind.label(),
                    r.mobile,
                    r.peer,
                    r.status.label()
                );
                num(&mut s, r.rssi);
                s.push(',');
                if let Some(a) = r.avg_rssi {
                    num(&mut s, a);
                }
                for v in [r.sinr, r.capacity, r.doppler, r.range] {
                    s.push(',');
                    num(&mut s, v);
                }
                s.push_str(",,,,,,,,,,");
            }
            Record::Flow(r) => {
                let _ = write!(
                    s,
                    ",flow,{},{},{},{},{},,,,,,,{},{},{},{},,,,,,",
                    r.class.label(),
                    r.flow,
                    r.train,
                    r.status.label(),
                    r.route.label(),
                    r.offered,
                    r.delivered,
                    r.dropped,
                    r.buffered
                );
            }
            Record::Event(r) => {
                let _ = write!(
                    s,
                    ",event,{},{},{},,{},,,,,,,,,,,,,,,,",
                    r.kind.label(),
                    r.subject,
                    r.to.as_deref().unwrap_or(""),
                    r.from.as_deref().unwrap_or("")
                );
            }
            Record::Delivery(r) => {
                let _ = write!(s, ",delivery,,{},{},,,,,,,,", r.flow, r.train);
                num(&mut s, r.path_range);
                let _ = write!(s, ",,{},,,", r.bytes);
                let d = &r.delay;
                for (i, v) in [
                    d.propagation,
                    d.relay_processing,
                    d.hst_processing,
                    d.network,
                    d.queuing,
                    d.total,
                ]
                .into_iter()
                .enumerate()
                {
                    if i > 0 {
                        s.push(',');
                    }
                    num(&mut s, v);
                }
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ids::{StationId, UavId};

    fn fields(r: &Record) -> usize {
        r.csv_line().split(',').count()
    }

    #[test]
    fn every_record_type_fills_all_columns() {
        let t = SimTime::from_millis(1500);
        let recs = [
            Record::Link(LinkRecord {
                time: t,
                kind: LinkKind::A2G,
                mobile: UavId(1).into(),
                peer: StationId(2).into(),
                status: LinkStatus::Connected,
                rssi: -70.0,
                avg_rssi: None,
                sinr: 20.0,
                capacity: 1e6,
                doppler: -0.0,
                range: 1000.0,
            }),
            Record::Flow(FlowRecord {
                time: t,
                flow: FlowId(1),
                train: TrainId(1),
                class: FlowClass::User,
                status: LinkStatus::Relayed,
                route: Route::Relayed,
                offered: 10,
                delivered: 5,
                dropped: 0,
                buffered: 5,
            }),
            Record::Event(EventRecord {
                time: t,
                kind: EventKind::A2gHandover,
                subject: UavId(1).into(),
                from: Some("gs1".into()),
                to: Some("gs2".into()),
            }),
            Record::Delivery(DeliveryRecord {
                time: t,
                flow: FlowId(1),
                train: TrainId(1),
                bytes: 5,
                path_range: 1.0,
                delay: DelayBudget::default(),
            }),
        ];
        for r in &recs {
            assert_eq!(fields(r), CSV_COLUMNS.len(), "{}", r.csv_line());
        }
        assert_eq!(
            recs[0].csv_line(),
            "1.500000,link,a2g,uav1,gs2,connected,,-70.000000,,20.000000,1000000.000000,0.000000,1000.000000,,,,,,,,,,"
        );
        assert_eq!(
            recs[2].csv_line(),
            "1.500000,event,a2g_handover,uav1,gs2,,gs1,,,,,,,,,,,,,,,,"
        );
    }
}
