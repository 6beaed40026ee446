//! Run orchestration and file output: record CSV, summary and manifest
//! documents, seed sweeps and mode comparison.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::engine::{self, csv_header, EngineError, EventKind, MetricsReport, Record, Summary};
use crate::scenario::{Mode, Scenario};

#[derive(Debug, thiserror::Error)]
pub enum OutputError {
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("simulation aborted: {0}")]
    Engine(#[from] EngineError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Records,
    SummaryOnly,
}

/// What a command produced, written next to the outputs as
/// `manifest.toml`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub scenario_digest: String,
    pub seeds: Vec<u64>,
    pub tool_version: String,
    /// File names relative to the output directory.
    pub outputs: Vec<String>,
}

impl RunManifest {
    fn new(sc: &Scenario, seeds: Vec<u64>) -> Self {
        RunManifest {
            scenario_digest: sc.digest(),
            seeds,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            outputs: Vec::new(),
        }
    }

    pub fn to_toml(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "scenario_digest = \"{}\"", self.scenario_digest);
        let seeds: Vec<String> = self.seeds.iter().map(u64::to_string).collect();
        let _ = writeln!(s, "seeds = [{}]", seeds.join(", "));
        let _ = writeln!(s, "tool_version = \"{}\"", self.tool_version);
        let outs: Vec<String> = self.outputs.iter().map(|o| format!("\"{o}\"")).collect();
        let _ = writeln!(s, "outputs = [{}]", outs.join(", "));
        s
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> OutputError + '_ {
    move |source| OutputError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_text(path: &Path, text: &str) -> Result<(), OutputError> {
    fs::write(path, text).map_err(io_err(path))
}

pub fn write_records(path: &Path, records: &[Record]) -> Result<(), OutputError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    let mut go = || -> io::Result<()> {
        writeln!(w, "{}", csv_header())?;
        for r in records {
            writeln!(w, "{}", r.csv_line())?;
        }
        w.flush()
    };
    go().map_err(io_err(path))
}

fn f6(v: f64) -> String {
    format!("{:.6}", v + 0.0)
}

/// Summary as TOML with fixed six-decimal numbers.
pub fn summary_toml(summary: &Summary, digest: &str, seed: u64) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "[run]");
    let _ = writeln!(s, "mode = \"{}\"", summary.mode.label());
    let _ = writeln!(s, "seed = {seed}");
    let _ = writeln!(s, "scenario_digest = \"{digest}\"");
    let _ = writeln!(s, "ticks = {}", summary.ticks);
    let _ = writeln!(s, "duration_s = {}", f6(summary.duration_s));
    let _ = writeln!(s, "handovers = {}", summary.handovers());
    let _ = writeln!(s, "offered_bytes = {}", summary.total_offered());
    let _ = writeln!(s, "delivered_bytes = {}", summary.total_delivered());
    let _ = writeln!(s, "dropped_bytes = {}", summary.total_dropped());
    let _ = writeln!(s, "\n[events]");
    for (k, n) in &summary.events {
        let _ = writeln!(s, "{} = {n}", k.label());
    }
    for f in &summary.flows {
        let _ = writeln!(s, "\n[[flows]]");
        let _ = writeln!(s, "id = {}", f.flow.0);
        let _ = writeln!(s, "train = {}", f.train.0);
        let _ = writeln!(s, "class = \"{}\"", f.class.label());
        let _ = writeln!(s, "offered_bytes = {}", f.offered);
        let _ = writeln!(s, "delivered_bytes = {}", f.delivered);
        let _ = writeln!(s, "dropped_bytes = {}", f.dropped);
        let _ = writeln!(s, "buffered_bytes = {}", f.buffered);
        let _ = writeln!(s, "throughput_bps = {}", f6(f.throughput_bps));
        let _ = writeln!(s, "outage_probability = {}", f6(f.outage_probability));
        let _ = writeln!(s, "per = {}", f6(f.per));
        if let Some(d) = &f.delay {
            let _ = writeln!(s, "deliveries = {}", d.count);
            let _ = writeln!(s, "delay_mean_s = {}", f6(d.mean));
            let _ = writeln!(s, "delay_p50_s = {}", f6(d.p50));
            let _ = writeln!(s, "delay_p95_s = {}", f6(d.p95));
            let _ = writeln!(s, "delay_p99_s = {}", f6(d.p99));
            let _ = writeln!(s, "delay_max_s = {}", f6(d.max));
            let _ = writeln!(s, "jitter_s = {}", f6(d.jitter));
            let _ = writeln!(s, "rtt_s = {}", f6(d.rtt()));
        }
    }
    s
}

fn stem(mode: Mode, seed: u64) -> String {
    format!("{}-seed{seed}", mode.label())
}

fn write_run(
    dir: &Path,
    report: &MetricsReport,
    digest: &str,
    seed: u64,
    format: OutputFormat,
) -> Result<Vec<String>, OutputError> {
    let stem = stem(report.summary.mode, seed);
    let mut names = Vec::new();
    if format == OutputFormat::Records {
        let name = format!("{stem}-records.csv");
        write_records(&dir.join(&name), &report.records)?;
        names.push(name);
    }
    let name = format!("{stem}-summary.toml");
    write_text(&dir.join(&name), &summary_toml(&report.summary, digest, seed))?;
    names.push(name);
    Ok(names)
}

fn prepare(dir: &Path) -> Result<(), OutputError> {
    fs::create_dir_all(dir).map_err(io_err(dir))
}

fn finish(dir: &Path, mut manifest: RunManifest) -> Result<RunManifest, OutputError> {
    manifest.outputs.push("manifest.toml".into());
    write_text(&dir.join("manifest.toml"), &manifest.to_toml())?;
    Ok(manifest)
}

/// Single run: one record/summary pair plus the manifest.
pub fn execute(
    sc: &Scenario,
    seed: u64,
    dir: &Path,
    format: OutputFormat,
) -> Result<(RunManifest, MetricsReport), OutputError> {
    prepare(dir)?;
    let report = engine::run(sc, seed)?;
    let mut manifest = RunManifest::new(sc, vec![seed]);
    manifest.outputs = write_run(dir, &report, &manifest.scenario_digest, seed, format)?;
    Ok((finish(dir, manifest)?, report))
}

/// One run per seed, executed concurrently, then an aggregate document.
pub fn sweep(
    sc: &Scenario,
    seeds: &[u64],
    dir: &Path,
    format: OutputFormat,
) -> Result<(RunManifest, Vec<Summary>), OutputError> {
    prepare(dir)?;
    let mut manifest = RunManifest::new(sc, seeds.to_vec());
    let digest = manifest.scenario_digest.clone();
    let results: Vec<Result<(Vec<String>, Summary), OutputError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = seeds
            .iter()
            .map(|&seed| {
                let digest = &digest;
                scope.spawn(move || {
                    let report = engine::run(sc, seed)?;
                    let names = write_run(dir, &report, digest, seed, format)?;
                    Ok((names, report.summary))
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("replication thread panicked"))
            .collect()
    });
    let mut summaries = Vec::new();
    for r in results {
        let (names, summary) = r?;
        manifest.outputs.extend(names);
        summaries.push(summary);
    }
    write_text(&dir.join("aggregate.toml"), &aggregate_toml(&summaries, seeds, &digest))?;
    manifest.outputs.push("aggregate.toml".into());
    Ok((finish(dir, manifest)?, summaries))
}

fn stats(values: impl Iterator<Item = f64>) -> (f64, f64, f64) {
    let v: Vec<f64> = values.collect();
    if v.is_empty() {
        return (0.0, 0.0, 0.0);
    }
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    let min = v.iter().copied().fold(f64::INFINITY, f64::min);
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (mean, min, max)
}

/// Mean, minimum and maximum of the headline numbers across seeds.
pub fn aggregate_toml(summaries: &[Summary], seeds: &[u64], digest: &str) -> String {
    let mut s = String::new();
    let seeds: Vec<String> = seeds.iter().map(u64::to_string).collect();
    let _ = writeln!(s, "scenario_digest = \"{digest}\"");
    let _ = writeln!(s, "seeds = [{}]", seeds.join(", "));
    let (m, lo, hi) = stats(summaries.iter().map(|x| x.handovers() as f64));
    let _ = writeln!(s, "handovers_mean = {}", f6(m));
    let _ = writeln!(s, "handovers_min = {}", f6(lo));
    let _ = writeln!(s, "handovers_max = {}", f6(hi));
    let Some(first) = summaries.first() else {
        return s;
    };
    for (i, f) in first.flows.iter().enumerate() {
        let _ = writeln!(s, "\n[[flows]]");
        let _ = writeln!(s, "id = {}", f.flow.0);
        let col = |g: &dyn Fn(&Summary) -> f64| stats(summaries.iter().map(g));
        let rows: [(&str, Box<dyn Fn(&Summary) -> f64>); 4] = [
            ("throughput_bps", Box::new(move |x: &Summary| x.flows[i].throughput_bps)),
            ("outage_probability", Box::new(move |x: &Summary| x.flows[i].outage_probability)),
            ("per", Box::new(move |x: &Summary| x.flows[i].per)),
            (
                "delay_max_s",
                Box::new(move |x: &Summary| x.flows[i].delay.as_ref().map_or(0.0, |d| d.max)),
            ),
        ];
        for (name, g) in &rows {
            let (m, lo, hi) = col(g.as_ref());
            let _ = writeln!(s, "{name}_mean = {}", f6(m));
            let _ = writeln!(s, "{name}_min = {}", f6(lo));
            let _ = writeln!(s, "{name}_max = {}", f6(hi));
        }
    }
    s
}

/// Side-by-side figures for a UAS-R run and its baseline twin.
pub fn comparison_toml(uasr: &Summary, baseline: &Summary, digest: &str, seed: u64) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "scenario_digest = \"{digest}\"");
    let _ = writeln!(s, "seed = {seed}");
    let _ = writeln!(s, "uasr_strictly_fewer_handovers = {}", uasr.handovers() < baseline.handovers());
    for (label, x) in [("uasr", uasr), ("cellular-baseline", baseline)] {
        let _ = writeln!(s, "\n[\"{label}\"]");
        let _ = writeln!(s, "handovers = {}", x.handovers());
        let _ = writeln!(s, "a2g_handovers = {}", x.event_count(EventKind::A2gHandover));
        let _ = writeln!(s, "cellular_handovers = {}", x.event_count(EventKind::CellularHandover));
        let _ = writeln!(s, "delivered_bytes = {}", x.total_delivered());
        let _ = writeln!(s, "dropped_bytes = {}", x.total_dropped());
        let worst = x
            .flows
            .iter()
            .map(|f| f.outage_probability)
            .fold(0.0, f64::max);
        let _ = writeln!(s, "max_outage_probability = {}", f6(worst));
        let delay = x
            .flows
            .iter()
            .filter_map(|f| f.delay.as_ref().map(|d| d.max))
            .fold(0.0, f64::max);
        let _ = writeln!(s, "max_delay_s = {}", f6(delay));
    }
    s
}

/// Runs the scenario in both modes and writes both pairs plus
/// `comparison.toml`.
pub fn compare(
    sc: &Scenario,
    seed: u64,
    dir: &Path,
    format: OutputFormat,
) -> Result<(RunManifest, Summary, Summary), OutputError> {
    prepare(dir)?;
    let mut manifest = RunManifest::new(sc, vec![seed]);
    let digest = manifest.scenario_digest.clone();
    let mut u = sc.clone();
    u.mode = Mode::Uasr;
    let ur = engine::run(&u, seed)?;
    let br = engine::run_cellular_baseline(sc, seed)?;
    manifest.outputs.extend(write_run(dir, &ur, &digest, seed, format)?);
    manifest.outputs.extend(write_run(dir, &br, &digest, seed, format)?);
    write_text(
        &dir.join("comparison.toml"),
        &comparison_toml(&ur.summary, &br.summary, &digest, seed),
    )?;
    manifest.outputs.push("comparison.toml".into());
    Ok((finish(dir, manifest)?, ur.summary, br.summary))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::parse_and_validate;

    const SC: &str = r#"
[engine]
end_time = 2.0

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
position = [1000, 1000]

[[traffic.flows]]
id = 1
train = 1
class = "user"
rate_bps = 1e6
"#;

    #[test]
    fn summary_document_is_valid_toml() {
        let sc = parse_and_validate(SC).unwrap().scenario;
        let r = engine::run(&sc, 7).unwrap();
        let text = summary_toml(&r.summary, &sc.digest(), 7);
        let v: toml::Table = toml::from_str(&text).unwrap();
        assert_eq!(v["run"]["seed"].as_integer(), Some(7));
        assert_eq!(v["flows"][0]["offered_bytes"].as_integer(), Some(250_000));
    }

    #[test]
    fn three_seed_sweep_writes_three_pairs_and_an_aggregate() {
        let sc = parse_and_validate(SC).unwrap().scenario;
        let dir = tempfile::tempdir().unwrap();
        let (m, sums) = sweep(&sc, &[1, 2, 3], dir.path(), OutputFormat::Records).unwrap();
        assert_eq!(sums.len(), 3);
        let csv = m.outputs.iter().filter(|o| o.ends_with("records.csv")).count();
        let summaries = m.outputs.iter().filter(|o| o.ends_with("summary.toml")).count();
        assert_eq!((csv, summaries), (3, 3));
        assert!(dir.path().join("aggregate.toml").exists());
        for o in &m.outputs {
            assert!(dir.path().join(o).exists(), "{o}");
        }
        let agg: toml::Table =
            toml::from_str(&fs::read_to_string(dir.path().join("aggregate.toml")).unwrap()).unwrap();
        assert_eq!(agg["seeds"].as_array().unwrap().len(), 3);
    }

    #[test]
    fn unwritable_directory_is_reported() {
        let sc = parse_and_validate(SC).unwrap().scenario;
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        fs::write(&blocker, "x").unwrap();
        let err = execute(&sc, 1, &blocker.join("sub"), OutputFormat::Records).unwrap_err();
        assert!(matches!(err, OutputError::Io { .. }), "{err}");
    }
}
