use std::path::PathBuf;

use uasr::engine::{self, EventKind, Record, Simulation, Summary};
use uasr::ids::UavId;
use uasr::scenario::{parse_and_validate, Mode, Scenario};

fn load(name: &str) -> Scenario {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(format!("{name}.toml"));
    parse_and_validate(&std::fs::read_to_string(p).unwrap())
        .unwrap()
        .scenario
}

fn parse(text: &str) -> Scenario {
    parse_and_validate(text).unwrap().scenario
}

fn assert_fold_matches(sc: &Scenario) {
    let r = engine::run(sc, 3).unwrap();
    let folded = Summary::fold(
        r.summary.mode,
        sc.ticks(),
        sc.engine.dt,
        &sc.traffic.flows,
        &r.records,
    );
    assert_eq!(folded, r.summary);
}

#[test]
fn summary_is_a_fold_of_the_records() {
    for name in ["a1_delay_budget", "a2_handover_trace", "a4_failover"] {
        assert_fold_matches(&load(name));
    }
    let mut baseline = load("a3_handover_reduction");
    baseline.mode = Mode::CellularBaseline;
    assert_fold_matches(&baseline);
}

#[test]
fn empty_world_runs_and_reports_nothing() {
    let sc = parse("[engine]\nend_time = 1.0\n\n[world]\n");
    let r = engine::run(&sc, 0).unwrap();
    assert!(r.records.is_empty());
    assert_eq!(r.summary.ticks, 10);
    assert!(r.summary.flows.is_empty());
    assert!(r.summary.events.values().all(|&n| n == 0));
}

#[test]
fn zero_end_time_is_a_single_initial_state() {
    let mut sc = load("a1_delay_budget");
    sc.engine.end_time = uasr::time::Duration::from_millis(0);
    let sc = parse(&sc.to_toml());
    let r = engine::run(&sc, 0).unwrap();
    assert_eq!(r.summary.ticks, 0);
    assert_eq!(r.summary.total_offered(), 0);
    assert!(r
        .records
        .iter()
        .all(|rec| matches!(rec, Record::Event(e) if e.kind == EventKind::Attach)));
}

#[test]
fn parked_train_is_a_fixed_point() {
    let sc = parse(
        r#"
[engine]
end_time = 5.0

[[world.tracks]]
id = 1
vertices = [[0, 0], [10000, 0]]

[[world.trains]]
id = 1
track = 1
position = 4000
speed = 0
cruise_speed = 0

[[world.uavs]]
id = 1
serves = 1

[[world.ground_stations]]
id = 1
position = [4000, 1500]
"#,
    );
    let mut sim = Simulation::new(&sc, 0).unwrap();
    sim.drain_records();
    let start = sim.uavs()[&UavId(1)].position;
    let mut previous: Option<Vec<String>> = None;
    while !sim.finished() {
        let lines: Vec<String> = sim
            .step()
            .unwrap()
            .iter()
            .map(|r| r.csv_line().split_once(',').unwrap().1.to_string())
            .collect();
        assert!(!lines.is_empty());
        if let Some(p) = &previous {
            assert_eq!(p, &lines, "records changed at t={}", sim.now().secs());
        }
        previous = Some(lines);
    }
    assert_eq!(sim.uavs()[&UavId(1)].position, start);
}
