use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::{info, warn};
use qubus_core::experiments::config::{ExperimentConfig, ExperimentKind};
use qubus_core::experiments::{emit, render, run_experiment, OutputFormat, RunOptions};
use qubus_core::Error;

/// Sweeps and reports for spin qubits in a charged quantum dot.
#[derive(Debug, Parser)]
#[command(name = "qubus", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Single-qubit fidelity sweep or detuning optimization.
    SweepSingle(Common),
    /// Cavity pass sweep over loss, coupling fraction and α.
    SweepQubus(Common),
    /// Rotation axis for a set of pulse delays.
    AxisDemo(Common),
    /// Commutator-loop gate report.
    GateReport(Common),
    /// Pulse schedule for a single-qubit target.
    Compile(Common),
}

#[derive(Debug, Args)]
struct Common {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output file; overrides `output.path`. Without either, writes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format; overrides `output.format`.
    #[arg(long)]
    format: Option<OutputFormat>,
    /// Worker threads (0 = one per core).
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Reserved; every current path is deterministic.
    #[arg(long)]
    seed: Option<u64>,
}

impl Command {
    fn parts(&self) -> (&Common, &'static [ExperimentKind]) {
        use ExperimentKind::*;
        match self {
            Command::SweepSingle(c) => (c, &[SingleQubitFidelitySweep, DetuningOptimization]),
            Command::SweepQubus(c) => (c, &[QubusPassSweep]),
            Command::AxisDemo(c) => (c, &[AxisDelayDemo]),
            Command::GateReport(c) => (c, &[QubusGateReport]),
            Command::Compile(c) => (c, &[CompileSu2]),
        }
    }
}

/// Row statuses that are informational rather than error codes.
const FLAGS: [&str; 5] = ["ok", "zero_phase", "no_phase", "validity_warning", "open_loop"];

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Io(_) => 2,
        _ => 3,
    }
}

fn run(cli: &Cli) -> Result<(), Error> {
    let (args, kinds) = cli.command.parts();
    if let Some(seed) = args.seed {
        info!("seed {seed} ignored: no stochastic paths");
    }
    let cfg = ExperimentConfig::from_path(&args.config)?;
    if !kinds.contains(&cfg.experiment) {
        return Err(Error::Config(format!(
            "config describes {:?}, which this subcommand does not run",
            cfg.experiment
        )));
    }
    let format = args
        .format
        .or(cfg.output.as_ref().map(|o| o.format))
        .unwrap_or(OutputFormat::Csv);
    let path = args.out.clone().or(cfg.output.as_ref().map(|o| PathBuf::from(&o.path)));

    let table = run_experiment(&cfg, RunOptions { workers: args.workers })?;
    let failed = (0..table.len())
        .filter(|&r| table.text(r, "status").is_some_and(|s| !FLAGS.contains(&s)))
        .count();
    if failed > 0 {
        warn!("{failed} of {} rows carry an error code", table.len());
    }
    match path {
        Some(p) => {
            emit(&table, format, &p)?;
            info!("wrote {} rows to {}", table.len(), p.display());
        }
        None => std::io::stdout().lock().write_all(&render(&table, format)?)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
