//! Fixed-tick simulation core: the eight-phase tick loop, three-hop delay
//! accounting, per-tick records and the summary fold, plus the trackside
//! cellular baseline.

mod cellular;
mod clock;
mod delay;
mod records;
mod sim;
mod summary;

pub use cellular::{midpoint_threshold, trackside_chain};
pub use clock::SimulationClock;
pub use delay::{compute_delay, DelayBudget, DelayPath};
pub use records::{
    csv_header, DeliveryRecord, EventKind, EventRecord, FlowRecord, LinkRecord, Record, Route,
    CSV_COLUMNS, RECORD_SCHEMA_VERSION,
};
pub use sim::{Attachment, Simulation};
pub use summary::{percentile, DelayStats, FlowSummary, FlowTally, Summary};

use crate::channel::ChannelError;
use crate::ids::FlowId;
use crate::link_protocol::ProtocolError;
use crate::registry::UnknownStrategy;
use crate::resource::ResourceError;
use crate::scenario::{Mode, Scenario};
use crate::time::SimTime;
use crate::world::WorldError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EngineError {
    #[error(transparent)]
    Strategy(#[from] UnknownStrategy),
    #[error(transparent)]
    World(#[from] WorldError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Resource(#[from] ResourceError),
    #[error("byte conservation broken for {flow}: offered {offered} != delivered {delivered} + dropped {dropped} + buffered {buffered}")]
    Conservation {
        flow: FlowId,
        offered: u64,
        delivered: u64,
        dropped: u64,
        buffered: u64,
    },
    #[error("at {time}: {source}")]
    At {
        time: SimTime,
        source: Box<EngineError>,
    },
}

impl EngineError {
    fn at(self, time: SimTime) -> EngineError {
        EngineError::At {
            time,
            source: Box::new(self),
        }
    }
}

/// Everything a run produces.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub records: Vec<Record>,
    pub summary: Summary,
}

/// Runs `sc` to its end time.
pub fn run(sc: &Scenario, seed: u64) -> Result<MetricsReport, EngineError> {
    let mut sim = Simulation::new(sc, seed)?;
    let mut records = sim.drain_records();
    while !sim.finished() {
        records.extend(sim.step()?);
    }
    records.extend(sim.drain_records());
    debug_assert_eq!(sim.clock().tick, sc.ticks());
    Ok(MetricsReport {
        summary: sim.summary(),
        records,
    })
}

/// Runs `sc` with the UAV tier replaced by trackside base stations.
pub fn run_cellular_baseline(sc: &Scenario, seed: u64) -> Result<MetricsReport, EngineError> {
    let mut b = sc.clone();
    b.mode = Mode::CellularBaseline;
    run(&b, seed)
}
