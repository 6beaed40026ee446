//! End-to-end acceptance checks. Each check prints one PASS/FAIL line; the
//! binary exits non-zero if any fails.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};

use uasr::channel::{fspl_db, LinkKind};
use uasr::engine::{self, EventKind, Record, Simulation};
use uasr::ids::{EntityId, StationId, TrainId};
use uasr::output::{self, OutputFormat};
use uasr::resource::{assign_codes, cdma_despread, spread, walsh_matrix};
use uasr::scenario::{parse_and_validate, Scenario};
use uasr::world::{Direction, Point2};

const C: f64 = 299_792_458.0;

type Outcome = Result<String, String>;

fn scenario_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(format!("{name}.toml"))
}

fn load(name: &str) -> Scenario {
    let text = std::fs::read_to_string(scenario_path(name)).expect("scenario file");
    parse_and_validate(&text).expect("valid scenario").scenario
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn events(records: &[Record], kind: EventKind) -> Vec<&uasr::engine::EventRecord> {
    records
        .iter()
        .filter_map(|r| match r {
            Record::Event(e) if e.kind == kind => Some(e),
            _ => None,
        })
        .collect()
}

/// 20 log10(4 pi d f / c), written out term by term.
fn fspl_oracle(d: f64, f: f64) -> f64 {
    20.0 * d.log10() + 20.0 * f.log10() + 20.0 * (4.0 * std::f64::consts::PI / C).log10()
}

fn delay_budget() -> Outcome {
    let sc = load("a1_delay_budget");
    let t0 = Instant::now();
    let report = engine::run(&sc, 1).map_err(|e| e.to_string())?;
    let wall = t0.elapsed().as_secs_f64();

    let train = &sc.world.trains[0];
    let gs = &sc.world.ground_stations[0];
    let altitude = sc.world.uav_defaults.altitude;
    let mut n = 0;
    let mut worst: f64 = 0.0;
    for r in &report.records {
        let Record::Delivery(d) = r else { continue };
        n += 1;
        let b = &d.delay;
        worst = worst.max(b.total);
        // Locked UAV directly over the train; the train has moved v t.
        let x = train.position + train.cruise_speed * d.time.secs();
        let a2g = ((x - gs.position.x).powi(2)
            + (0.0 - gs.position.y).powi(2)
            + (altitude - gs.antenna_height).powi(2))
        .sqrt();
        let a2t = altitude - train.antenna_height;
        let range = a2g + a2t;
        check((range - d.path_range).abs() < 0.05, || {
            format!("t={} path range {} vs oracle {range}", d.time.secs(), d.path_range)
        })?;
        check((b.propagation - d.path_range / C).abs() < 1e-15, || {
            format!("propagation {} != range/c {}", b.propagation, d.path_range / C)
        })?;
        check(b.relay_processing == sc.delay.uav_processing_s, || {
            format!("one forwarding node expected, got {} s", b.relay_processing)
        })?;
        check(b.hst_processing == sc.delay.hst_processing_s && b.network == 0.0, || {
            format!("hst {} network {}", b.hst_processing, b.network)
        })?;
        let sum = b.propagation + b.relay_processing + b.hst_processing + b.network + b.queuing;
        check((b.total - sum).abs() < 1e-12 && b.queuing >= 0.0, || {
            format!("total {} != component sum {sum}", b.total)
        })?;
        check(b.total < 0.061, || format!("delay {} s at t={}", b.total, d.time.secs()))?;
        if d.path_range <= 59_900.0 {
            check(b.propagation < 0.0002, || format!("propagation {} s", b.propagation))?;
        }
    }
    check(n > 0, || "no deliveries".into())?;
    check(report.summary.total_dropped() == 0, || "bytes dropped".into())?;
    check(wall < 5.0, || format!("runtime {wall:.3} s"))?;
    Ok(format!("{n} deliveries, max delay {:.4} ms, runtime {wall:.3} s", worst * 1e3))
}

fn a2t_dopplers(sc: &Scenario) -> Result<(usize, f64), String> {
    let mut sim = Simulation::new(sc, 1).map_err(|e| e.to_string())?;
    let mut locked_ticks = 0;
    let mut worst: f64 = 0.0;
    while !sim.finished() {
        let recs = sim.step().map_err(|e| e.to_string())?;
        let locked = sim.uavs().values().all(|u| u.locked);
        if !locked {
            continue;
        }
        for r in recs {
            if let Record::Link(l) = r {
                if l.kind == LinkKind::A2T {
                    locked_ticks += 1;
                    worst = worst.max(l.doppler.abs());
                }
            }
        }
    }
    Ok((locked_ticks, worst))
}

fn doppler() -> Outcome {
    let sc = load("a1_delay_budget");
    let (ticks, worst) = a2t_dopplers(&sc)?;
    check(ticks > 0, || "UAV never locked".into())?;
    check(worst == 0.0, || format!("matched |doppler| reached {worst} Hz"))?;

    let mut res = sc.clone();
    res.world.uav_defaults.controller = "residual".into();
    // Start inside the lock tolerance but off the aim point so the
    // residual correction has work to do.
    res.world.uavs[0].position = Some(Point2::new(6.0, 4.0));
    let (rticks, rworst) = a2t_dopplers(&res)?;
    let bound = sc.channel.carrier_hz.a2t * sc.tracking.residual_speed_bound / C;
    check(rticks > 0, || "residual UAV never locked".into())?;
    check(rworst <= bound * (1.0 + 1e-12), || {
        format!("residual |doppler| {rworst} Hz above bound {bound} Hz")
    })?;
    Ok(format!(
        "matched 0 Hz over {ticks} ticks; residual max {rworst:.3} Hz <= {bound:.3} Hz"
    ))
}

fn fspl_law() -> Outcome {
    let expected = 20.0 * 2f64.log10();
    let mut worst: f64 = 0.0;
    for i in 0..20 {
        let d = 10.0 * 2.7f64.powi(i % 10) + 3.0 * i as f64;
        let f = [0.9e9, 2.0e9, 2.4e9, 5.8e9, 30.0e9][i as usize % 5] * (1.0 + 0.01 * i as f64);
        let a = fspl_db(d, f).map_err(|e| e.to_string())?;
        let b = fspl_db(2.0 * d, f).map_err(|e| e.to_string())?;
        check((a - fspl_oracle(d, f)).abs() < 1e-9, || format!("fspl({d}, {f}) = {a}"))?;
        let err = (b - a - 6.0206).abs();
        worst = worst.max(err);
        check(err <= 1e-4 && (b - a - expected).abs() < 1e-9, || {
            format!("doubling {d} m at {f} Hz adds {} dB", b - a)
        })?;
    }
    Ok(format!("20 pairs, max deviation from 6.0206 dB {worst:.2e}"))
}

fn walsh() -> Outcome {
    let mut pairs = 0u64;
    let mut order = 2;
    while order <= 64 {
        let m = walsh_matrix(order).map_err(|e| e.to_string())?;
        let rows = m.rows();
        check(rows.len() == order, || format!("order {order} has {} rows", rows.len()))?;
        for (i, a) in rows.iter().enumerate() {
            check(a.len() == order && a.iter().all(|&c| c == 1 || c == -1), || {
                format!("order {order} row {i} not a +/-1 sequence of length {order}")
            })?;
            for (j, b) in rows.iter().enumerate() {
                let ip: i64 = a.iter().zip(b).map(|(&x, &y)| i64::from(x) * i64::from(y)).sum();
                let want = if i == j { order as i64 } else { 0 };
                check(ip == want, || format!("order {order} rows {i},{j}: {ip}"))?;
                if i < j {
                    pairs += 1;
                }
            }
        }
        for k in 1..order {
            let ids: Vec<EntityId> = (1..=k as u32).map(|i| EntityId::Train(TrainId(i))).collect();
            let codes = assign_codes(ids.iter().copied(), order).map_err(|e| e.to_string())?;
            let symbols: BTreeMap<EntityId, i32> = ids
                .iter()
                .enumerate()
                .map(|(i, &e)| (e, ((i as i32 * 7 + order as i32) % 9) - 4))
                .collect();
            let composite = spread(&symbols, &codes).map_err(|e| e.to_string())?;
            let back = cdma_despread(&composite, &codes).map_err(|e| e.to_string())?;
            check(back == symbols, || format!("order {order}, {k} entities: despread mismatch"))?;
        }
        order *= 2;
    }
    Ok(format!("orders 2..64, {pairs} distinct row pairs orthogonal, despreading exact"))
}

fn freq_scenario(trains: &[(bool, f64)]) -> String {
    let mut s = String::from(
        "[engine]\nend_time = 0.2\n\n[[world.tracks]]\nid = 1\nvertices = [[0, 0], [40000, 0]]\n\n\
         [[world.ground_stations]]\nid = 1\nposition = [20000, 1000]\n",
    );
    for (i, (reverse, pos)) in trains.iter().enumerate() {
        let id = i + 1;
        s.push_str(&format!(
            "\n[[world.trains]]\nid = {id}\ntrack = 1\nposition = {pos:.1}\ndirection = {}\n",
            u8::from(*reverse)
        ));
        s.push_str(&format!("\n[[world.uavs]]\nid = {id}\nserves = {id}\n"));
    }
    s
}

fn frequency_plan() -> Outcome {
    let mut runner = TestRunner::new(Config {
        cases: 1000,
        failure_persistence: None,
        ..Config::default()
    });
    let access = ["tdma", "cdma", "sdma-tdma"];
    let strategy = (
        prop::collection::vec((any::<bool>(), 1000.0f64..39000.0), 2..7),
        0usize..3,
    )
        .prop_filter("both directions present", |(t, _)| {
            t.iter().any(|x| x.0) && t.iter().any(|x| !x.0)
        });
    runner
        .run(&strategy, |(trains, a)| {
            let mut sc = parse_and_validate(&freq_scenario(&trains))
                .map_err(|e| TestCaseError::fail(format!("{e:?}")))?
                .scenario;
            sc.resource.access = access[a].into();
            let mut sim = Simulation::new(&sc, 0).map_err(|e| TestCaseError::fail(e.to_string()))?;
            sim.step().map_err(|e| TestCaseError::fail(e.to_string()))?;
            let total = sc.channel.bandwidth_hz.a2t;
            let grants = &sim.allocation().grants;
            prop_assert_eq!(grants.len(), trains.len());
            for (t, g) in grants {
                let dir = sim.trains()[t].direction;
                // Lower half forward, upper half reverse.
                let (lo, hi) = match dir {
                    Direction::Forward => (0.0, total / 2.0),
                    Direction::Reverse => (total / 2.0, total),
                };
                prop_assert!(g.band.lo >= lo && g.band.hi <= hi, "{:?} outside its half", g.band);
                for (u, h) in grants {
                    if sim.trains()[u].direction != dir {
                        prop_assert!(
                            g.band.hi <= h.band.lo || h.band.hi <= g.band.lo,
                            "{:?} overlaps {:?}",
                            g.band,
                            h.band
                        );
                    }
                }
            }
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    Ok("1000 randomized two-direction scenarios, no cross-direction overlap".into())
}

/// Replays the handover rule over an RSSI trace computed from geometry
/// alone. Returns (time ms, from, to) for every station change.
fn handover_oracle(sc: &Scenario) -> Vec<(u64, u32, u32)> {
    let dt_ms = sc.engine.dt.millis();
    let dt = dt_ms as f64 / 1000.0;
    let ticks = sc.engine.end_time.millis() / dt_ms;
    let window_ms = sc.protocol.update_interval.millis();
    let guard_ms = sc.protocol.dwell_guard.millis();
    let thr = sc.protocol.handover_threshold_dbm;
    let entry = thr + sc.protocol.entry_hysteresis_db;
    let ch = &sc.channel;
    let noise = -174.0 + 10.0 * ch.bandwidth_hz.a2g.log10() + ch.noise_figure_db;
    let train = &sc.world.trains[0];
    let z = sc.world.uav_defaults.altitude;
    let gss = &sc.world.ground_stations;

    let mut windows: Vec<Vec<(u64, f64)>> = vec![Vec::new(); gss.len()];
    let mut serving: Option<usize> = None;
    let mut last_ho: Option<u64> = None;
    let mut out = Vec::new();
    let mut x = train.position;
    for k in 0..=ticks {
        let now = k * dt_ms;
        if k > 0 {
            x += train.cruise_speed * dt;
        }
        let mut usable = Vec::new();
        for (i, g) in gss.iter().enumerate() {
            let dx = x - g.position.x;
            let dy = 0.0 - g.position.y;
            let dz = z - g.antenna_height;
            let horiz = (dx * dx + dy * dy).sqrt();
            let range = (horiz * horiz + dz * dz).sqrt();
            let elev = dz.abs().atan2(horiz).to_degrees();
            let penalty = if elev < ch.multipath_threshold_deg { ch.multipath_penalty_db } else { 0.0 };
            let rssi = g.tx_power_dbm + g.peak_gain_dbi + sc.radio.uav_a2g_gain_dbi
                - fspl_oracle(range, ch.carrier_hz.a2g)
                - penalty;
            let w = &mut windows[i];
            w.push((now, rssi));
            w.retain(|&(t, _)| t + window_ms > now);
            let avg = w.iter().map(|s| s.1).sum::<f64>() / w.len() as f64;
            let dead = rssi < ch.receiver_sensitivity_dbm || rssi - noise < ch.min_sinr_db;
            if !dead {
                usable.push((i, avg));
            }
        }
        let best = |min: f64, skip: Option<usize>| {
            let mut b: Option<(usize, f64)> = None;
            for &(i, a) in &usable {
                if Some(i) != skip && a >= min && b.is_none_or(|(_, ba)| a > ba) {
                    b = Some((i, a));
                }
            }
            b.map(|b| b.0)
        };
        match serving {
            None => serving = best(f64::NEG_INFINITY, None),
            Some(s) => {
                let cur = usable.iter().find(|u| u.0 == s).map(|u| u.1);
                let guard_ok = last_ho.is_none_or(|t| now - t >= guard_ms);
                let wants = match cur {
                    None => true,
                    Some(a) => a < thr && guard_ok,
                };
                if wants {
                    if let Some(to) = best(entry, Some(s)) {
                        out.push((now, gss[s].id.0, gss[to].id.0));
                        serving = Some(to);
                        last_ho = Some(now);
                    }
                }
            }
        }
    }
    out
}

fn handover_trace() -> Outcome {
    let sc = load("a2_handover_trace");
    let report = engine::run(&sc, 1).map_err(|e| e.to_string())?;
    let got: Vec<(u64, String, String)> = events(&report.records, EventKind::A2gHandover)
        .into_iter()
        .map(|e| {
            (
                e.time.millis(),
                e.from.clone().unwrap_or_default(),
                e.to.clone().unwrap_or_default(),
            )
        })
        .collect();
    let want: Vec<(u64, String, String)> = handover_oracle(&sc)
        .into_iter()
        .map(|(t, a, b)| (t, StationId(a).to_string(), StationId(b).to_string()))
        .collect();
    check(!want.is_empty(), || "oracle produced no handovers".into())?;
    check(got == want, || format!("engine {got:?}\noracle {want:?}"))?;
    let times: Vec<String> = got.iter().map(|g| format!("{:.2}", g.0 as f64 / 1000.0)).collect();
    Ok(format!("{} handovers match oracle at t = {} s", got.len(), times.join(", ")))
}

fn failover() -> Outcome {
    let sc = load("a4_failover");
    let report = engine::run(&sc, 1).map_err(|e| e.to_string())?;
    let fault = &sc.engine.faults[0];
    let start = fault.start.millis();
    let dt = sc.engine.dt.millis();
    let fo = events(&report.records, EventKind::Failover);
    let first = fo
        .iter()
        .find(|e| e.time.millis() >= start)
        .ok_or("no failover after the outage")?;
    let lag = first.time.millis() - start;
    check(lag <= 250 + dt, || format!("relayed after {lag} ms"))?;
    let relayed = report.records.iter().any(|r| {
        matches!(r, Record::Flow(f) if f.time == first.time
            && f.route == uasr::engine::Route::Relayed)
    });
    check(relayed, || "traffic not relayed on the failover tick".into())?;

    let end = sc.engine.end_time.secs();
    let mut delivered: BTreeMap<u32, u64> = BTreeMap::new();
    for r in &report.records {
        if let Record::Delivery(d) = r {
            *delivered.entry(d.flow.0).or_default() += d.bytes;
        }
    }
    for (spec, f) in sc.traffic.flows.iter().zip(&report.summary.flows) {
        let offered = (spec.rate_bps * end / 8.0).round() as u64;
        check(f.offered == offered, || format!("flow {}: offered {} vs {offered}", f.flow.0, f.offered))?;
        check(f.dropped == 0, || format!("flow {}: {} bytes dropped", f.flow.0, f.dropped))?;
        check(f.offered == f.delivered + f.dropped + f.buffered, || {
            format!("flow {}: conservation broken", f.flow.0)
        })?;
        let d = delivered.get(&f.flow.0).copied().unwrap_or(0);
        check(d == f.delivered, || format!("flow {}: delivery records {d} vs {}", f.flow.0, f.delivered))?;
    }
    Ok(format!(
        "relayed {lag} ms after the outage, 0 bytes dropped, conservation exact"
    ))
}

/// Crossings of the equal-RSSI points between consecutive trackside sites
/// over the distance the train covers.
fn baseline_oracle(sc: &Scenario) -> u64 {
    let t = &sc.world.trains[0];
    let s = sc.cellular.spacing_m;
    let len = sc.world.tracks[0].vertices.last().unwrap().x;
    let end = (t.position + t.cruise_speed * sc.engine.end_time.secs()).min(len);
    let sites = (len / s).floor() as u64 + 1;
    (0..sites - 1)
        .filter(|k| (*k as f64 + 0.5) * s > t.position && (*k as f64 + 0.5) * s < end)
        .count() as u64
}

fn handover_reduction() -> Outcome {
    let sc = load("a3_handover_reduction");
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (_, u, b) = output::compare(&sc, 1, dir.path(), OutputFormat::SummaryOnly)
        .map_err(|e| e.to_string())?;
    let oracle = baseline_oracle(&sc);
    let (nu, nb) = (u.handovers(), b.handovers());
    check(nb.abs_diff(oracle) <= 1, || format!("baseline {nb} vs oracle {oracle}"))?;
    check(nu <= 4, || format!("UAS-R {nu} handovers"))?;
    check(nu < nb, || format!("UAS-R {nu} not below baseline {nb}"))?;
    let doc = std::fs::read_to_string(dir.path().join("comparison.toml")).map_err(|e| e.to_string())?;
    let v: toml::Table = toml::from_str(&doc).map_err(|e| e.to_string())?;
    check(
        v["uasr"]["handovers"].as_integer() == Some(nu as i64)
            && v["cellular-baseline"]["handovers"].as_integer() == Some(nb as i64)
            && v["uasr_strictly_fewer_handovers"].as_bool() == Some(true),
        || format!("comparison document disagrees:\n{doc}"),
    )?;
    Ok(format!("baseline {nb} (oracle {oracle}), UAS-R {nu}"))
}

fn permuted(text: &str) -> String {
    let mut t: toml::Table = toml::from_str(text).unwrap();
    fn rev(t: &mut toml::Table, section: &str, key: &str) {
        if let Some(toml::Value::Array(a)) = t
            .get_mut(section)
            .and_then(|s| s.as_table_mut())
            .and_then(|s| s.get_mut(key))
        {
            a.reverse();
        }
    }
    for k in ["tracks", "trains", "uavs", "ground_stations"] {
        rev(&mut t, "world", k);
    }
    rev(&mut t, "traffic", "flows");
    for f in t["traffic"]["flows"].as_array_mut().unwrap() {
        f.as_table_mut().unwrap().insert("jitter".into(), toml::Value::Float(0.3));
    }
    toml::to_string(&t).unwrap()
}

fn read_all(dir: &std::path::Path) -> BTreeMap<String, Vec<u8>> {
    let mut m = BTreeMap::new();
    for e in std::fs::read_dir(dir).unwrap() {
        let e = e.unwrap();
        m.insert(e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap());
    }
    m
}

fn determinism() -> Outcome {
    let original = std::fs::read_to_string(scenario_path("a4_failover")).map_err(|e| e.to_string())?;
    // Jitter on so the seed actually drives the run.
    let mut t: toml::Table = toml::from_str(&original).map_err(|e| e.to_string())?;
    for f in t["traffic"]["flows"].as_array_mut().unwrap() {
        f.as_table_mut().unwrap().insert("jitter".into(), toml::Value::Float(0.3));
    }
    let base = toml::to_string(&t).map_err(|e| e.to_string())?;
    let perm = permuted(&original);
    check(base != perm, || "permutation changed nothing".into())?;

    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut outs = Vec::new();
    for (i, text) in [&base, &base, &perm].into_iter().enumerate() {
        let sc = parse_and_validate(text).map_err(|e| format!("{e:?}"))?.scenario;
        let dir = tmp.path().join(i.to_string());
        output::execute(&sc, 99, &dir, OutputFormat::Records).map_err(|e| e.to_string())?;
        outs.push(read_all(&dir));
    }
    check(outs[0].len() == 3, || format!("expected 3 files, got {:?}", outs[0].keys()))?;
    check(outs[0] == outs[1], || "rerun differs".into())?;
    check(outs[0] == outs[2], || "permuted scenario differs".into())?;
    let sc = parse_and_validate(&base).map_err(|e| format!("{e:?}"))?.scenario;
    let other = tmp.path().join("seed");
    output::execute(&sc, 100, &other, OutputFormat::Records).map_err(|e| e.to_string())?;
    let a = &outs[0]["uasr-seed99-records.csv"];
    let b = &read_all(&other)["uasr-seed100-records.csv"];
    check(a != b, || "seed has no effect".into())?;
    let bytes: usize = outs[0].values().map(Vec::len).sum();
    Ok(format!("{bytes} output bytes identical across rerun and permutation"))
}

fn performance() -> Outcome {
    let sc = load("perf_two_hours");
    check(
        sc.engine.end_time.secs() == 7200.0
            && sc.engine.dt.millis() == 100
            && sc.world.trains.len() == 1
            && sc.world.uavs.len() == 2
            && sc.world.ground_stations.len() == 4,
        || "scenario shape differs from 1 train, 2 UAVs, 4 GSs, 2 h at 0.1 s".into(),
    )?;
    let t0 = Instant::now();
    let report = engine::run(&sc, 1).map_err(|e| e.to_string())?;
    let wall = t0.elapsed().as_secs_f64();
    let changes = report.summary.event_count(EventKind::FlightChange);
    check(changes == 1, || format!("{changes} flight changes"))?;
    check(wall < 10.0, || format!("runtime {wall:.3} s"))?;
    Ok(format!("{} records, 1 flight change, runtime {wall:.3} s", report.records.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("delay budget", delay_budget),
        ("a2t doppler", doppler),
        ("fspl doubling", fspl_law),
        ("walsh orthogonality", walsh),
        ("frequency plan", frequency_plan),
        ("handover oracle", handover_trace),
        ("a2a failover", failover),
        ("handover reduction", handover_reduction),
        ("determinism", determinism),
        ("performance", performance),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why}", i + 1);
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
