use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use cvtele_cli::{execute, Command, Format, RunOptions};

/// Average fidelity and fidelity deviation of CV teleportation, swept over
/// resource, ensemble and noise parameters.
#[derive(Parser)]
#[command(name = "cvtele", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evaluate a single parameter point (the axis, if any, is ignored).
    Point(CommonArgs),
    /// Evaluate every point of the configured axis.
    Sweep(CommonArgs),
    /// Entanglement-free baseline and classical bound per point.
    Baseline(CommonArgs),
    /// Sweep with quadrature-vs-Monte-Carlo comparison columns; fails if any
    /// point deviates by more than 4 (F) or 6 (ΔF) standard errors.
    McCheck(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// JSON configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a configuration key, e.g. `--set ensemble.sigma_c=2.5`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output file (default: standard output).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: available parallelism).
    #[arg(long)]
    workers: Option<usize>,
    /// Monte Carlo seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Omit the generation-time line so reruns are byte-identical.
    #[arg(long)]
    no_timestamp: bool,
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    format: OutputFormat,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormat {
    Csv,
    Json,
}

fn run(cli: Cli) -> Result<bool> {
    let (command, args) = match cli.command {
        Cmd::Point(a) => (Command::Point, a),
        Cmd::Sweep(a) => (Command::Sweep, a),
        Cmd::Baseline(a) => (Command::Baseline, a),
        Cmd::McCheck(a) => (Command::McCheck, a),
    };
    let opts = RunOptions {
        command,
        config: args.config,
        overrides: args.overrides,
        workers: args.workers,
        seed: args.seed,
        timestamp: !args.no_timestamp,
    };
    let report = execute(&opts)?;
    let format = match args.format {
        OutputFormat::Csv => Format::Csv,
        OutputFormat::Json => Format::Json,
    };
    match &args.out {
        Some(path) => {
            let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
            let mut w = BufWriter::new(file);
            report.write(&mut w, format)?;
            w.flush()?;
        }
        None => report.write(io::stdout().lock(), format)?,
    }
    if command == Command::McCheck {
        return Ok(match report.worst_mc {
            Some((zf, zd)) => {
                eprintln!("worst deviation from Monte Carlo: F {zf:.2} se, dF {zd:.2} se");
                zf < 4.0 && zd < 6.0
            }
            None => {
                eprintln!("no Monte Carlo comparison could be computed");
                false
            }
        });
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
