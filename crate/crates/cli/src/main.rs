use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};
use uasr::output::{self, OutputError, OutputFormat};
use uasr::scenario::{parse_and_validate, Mode, Scenario, ScenarioError};
use uasr::time::Duration;

/// Deterministic fixed-tick simulator of UAV-relayed train communication.
#[derive(Debug, Parser)]
#[command(name = "uasr", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one replication and write records, summary and manifest.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Parse and check a scenario without running it.
    Validate {
        scenario: PathBuf,
    },
    /// Run the scenario in UAS-R mode and as the cellular baseline.
    Compare {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run several seeds in parallel and aggregate the summaries.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Comma-separated seed list.
        #[arg(long, value_delimiter = ',', required = true)]
        seeds: Vec<u64>,
    },
}

#[derive(Debug, Args)]
struct Common {
    scenario: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides the scenario's mode.
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Overrides the tick length, in seconds.
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long, value_enum, default_value_t = FormatArg::Records)]
    format: FormatArg,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Uasr,
    CellularBaseline,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Records,
    SummaryOnly,
}

impl From<FormatArg> for OutputFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Records => OutputFormat::Records,
            FormatArg::SummaryOnly => OutputFormat::SummaryOnly,
        }
    }
}

enum Failure {
    /// Bad input: unreadable, malformed or invalid scenario, bad override.
    Input(String),
    /// The run itself or writing its outputs failed.
    Runtime(String),
}

impl From<OutputError> for Failure {
    fn from(e: OutputError) -> Self {
        Failure::Runtime(e.to_string())
    }
}

fn report_scenario_error(path: &Path, e: ScenarioError) -> Failure {
    let mut msg = format!("{}: invalid scenario", path.display());
    match e {
        ScenarioError::Syntax { line, column, message } => {
            msg = format!("{}:{line}:{column}: {message}", path.display());
        }
        ScenarioError::Invalid(errors) => {
            for fe in errors {
                msg.push_str(&format!("\n  {fe}"));
            }
        }
    }
    Failure::Input(msg)
}

fn load(path: &Path) -> Result<(Scenario, Vec<String>), Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Input(format!("cannot read {}: {e}", path.display())))?;
    let v = parse_and_validate(&text).map_err(|e| report_scenario_error(path, e))?;
    let warnings = v.warnings.iter().map(ToString::to_string).collect();
    Ok((v.scenario, warnings))
}

fn load_with_overrides(c: &Common) -> Result<Scenario, Failure> {
    let (mut sc, _) = load(&c.scenario)?;
    if let Some(m) = c.mode {
        sc.mode = match m {
            ModeArg::Uasr => Mode::Uasr,
            ModeArg::CellularBaseline => Mode::CellularBaseline,
        };
    }
    if let Some(dt) = c.dt {
        sc.engine.dt = Duration::from_secs_exact(dt).ok_or_else(|| {
            Failure::Input(format!("--dt {dt}: not a non-negative whole number of milliseconds"))
        })?;
    }
    // Overrides go through the same checks as the file itself.
    let v = parse_and_validate(&sc.to_toml()).map_err(|e| report_scenario_error(&c.scenario, e))?;
    for w in &v.warnings {
        warn!("{w}");
    }
    Ok(v.scenario)
}

fn dispatch(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Validate { scenario } => {
            let (sc, warnings) = load(&scenario)?;
            for w in warnings {
                println!("warning: {w}");
            }
            println!("ok {}", sc.digest());
        }
        Command::Run { common, seed } => {
            let sc = load_with_overrides(&common)?;
            let (m, report) = output::execute(&sc, seed, &common.out, common.format.into())?;
            info!("{} records written", report.records.len());
            println!("handovers {}", report.summary.handovers());
            for o in m.outputs {
                println!("{}", common.out.join(o).display());
            }
        }
        Command::Compare { common, seed } => {
            let sc = load_with_overrides(&common)?;
            let (_, u, b) = output::compare(&sc, seed, &common.out, common.format.into())?;
            println!("uasr handovers {}", u.handovers());
            println!("cellular-baseline handovers {}", b.handovers());
            println!("{}", common.out.join("comparison.toml").display());
        }
        Command::Sweep { common, seeds } => {
            let sc = load_with_overrides(&common)?;
            let (_, sums) = output::sweep(&sc, &seeds, &common.out, common.format.into())?;
            for (seed, s) in seeds.iter().zip(&sums) {
                println!("seed {seed} handovers {}", s.handovers());
            }
            println!("{}", common.out.join("aggregate.toml").display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("UASR_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
