use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use ultimatum_core::config::{parse_config, Command, RunSpec};
use ultimatum_core::experiment::orchestrate;
use ultimatum_core::CaseId;

/// Monte Carlo simulator for authorship-order ultimatums in co-authored projects.
#[derive(Parser, Debug)]
#[command(name = "coauthor-sim", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    #[command(flatten)]
    common: Common,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Replicate one scenario and report its ultimatum rate.
    Run,
    /// Rate over the utility and contribution spectrum widths.
    Fig1,
    /// Duration, progress and per-position sweeps.
    Fig2,
    /// All special cases (SA1-SA8, P1-P4).
    Fig3,
    /// A single named case, e.g. `case SA3`.
    Case { id: CaseId },
    /// Fit regressions to a fig1/fig2a/fig2b CSV.
    Fit,
}

#[derive(Args, Debug)]
struct Common {
    /// TOML configuration; flags given here take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Replications per scenario cell.
    #[arg(long, global = true)]
    reps: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Write every ultimatum to events.csv (run and case only).
    #[arg(long, global = true)]
    log_events: bool,
    /// Result CSV to fit.
    #[arg(long, global = true)]
    input: Option<PathBuf>,
}

fn build_spec(cli: Cli) -> Result<RunSpec> {
    let mut spec = match &cli.common.config {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            parse_config(&text).with_context(|| format!("in {}", path.display()))?
        }
        None => RunSpec::default(),
    };
    spec.command = match cli.command {
        Cmd::Run => Command::Run,
        Cmd::Fig1 => Command::Fig1,
        Cmd::Fig2 => Command::Fig2,
        Cmd::Fig3 => Command::Fig3,
        Cmd::Case { id } => Command::Case(id),
        Cmd::Fit => Command::Fit,
    };
    let c = cli.common;
    if c.seed.is_some() {
        spec.master_seed = c.seed;
    }
    if c.reps.is_some() {
        spec.reps = c.reps;
    }
    if let Some(out) = c.out {
        spec.output_dir = out;
    }
    if let Some(w) = c.workers {
        spec.workers = w;
    }
    spec.log_events |= c.log_events;
    if c.input.is_some() {
        spec.input = c.input;
    }
    if spec.master_seed.is_none() && spec.command != Command::Fit {
        let seed: u64 = rand::random();
        eprintln!("no seed given, using --seed {seed}");
        spec.master_seed = Some(seed);
    }
    spec.validate()?;
    Ok(spec)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = build_spec(cli).and_then(|spec| Ok(orchestrate(&spec)?));
    match result {
        Ok(report) => {
            for line in &report.summary {
                println!("{line}");
            }
            for file in &report.files {
                eprintln!("wrote {}", file.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
