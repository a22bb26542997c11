use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use corrnet_harness::{emit_csv, run_experiment, write_csv, ExperimentConfig, ExperimentKind};

#[derive(Parser)]
#[command(name = "corrnet", version, about = "Decoding experiments for correlated sources under network coding")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Error-probability bounds and symbol requirements.
    Bound(RunArgs),
    /// Monte Carlo decoding of a Gaussian sensor field.
    Sensor(RunArgs),
    /// Decoding of a grayscale frame sequence.
    Images(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// CSV output path (default: config `output`, else stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let (kind, args) = match cli.command {
        Command::Bound(a) => (ExperimentKind::BoundSweep, a),
        Command::Sensor(a) => (ExperimentKind::Sensor, a),
        Command::Images(a) => (ExperimentKind::Images, a),
    };
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if cfg.experiment != kind {
        bail!(
            "{} describes a {} experiment, not {}",
            args.config.display(),
            cfg.experiment.as_str(),
            kind.as_str()
        );
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(out) = args.out {
        cfg.output = Some(out);
    }
    let rows = run_experiment(&cfg).with_context(|| format!("{} experiment failed", kind.as_str()))?;
    let comments = cfg.comment_lines();
    match &cfg.output {
        Some(path) => emit_csv(&rows, &comments, path).with_context(|| format!("writing {}", path.display()))?,
        None => write_csv(&rows, &comments, io::stdout().lock())?,
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
