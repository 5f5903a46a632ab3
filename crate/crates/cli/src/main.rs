//! `pbcox`: Cox regression with the exact Poisson-binomial likelihood for
//! tied event times.

mod error;
mod fit;
mod io;
mod pb;
mod simulate;
mod sweep;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "pbcox", version, about)]
struct Cli {
    /// Worker threads for simulation replicates and sweep cells.
    #[arg(long, global = true, env = "PBCOX_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit proportional-hazards models to a dataset.
    Fit(fit::FitArgs),
    /// Evaluate a Poisson-binomial pmf.
    Pb(pb::PbArgs),
    /// Run a Monte Carlo simulation study.
    Simulate(simulate::SimulateArgs),
    /// Refit a dataset over a grid of grouping widths.
    Sweep(sweep::SweepArgs),
}

fn run(cli: &Cli) -> CliResult<()> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(CliError::Input("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Input(format!("cannot start thread pool: {e}")))?;
    }
    match &cli.command {
        Command::Fit(a) => fit::run(a),
        Command::Pb(a) => pb::run(a),
        Command::Simulate(a) => simulate::run(a),
        Command::Sweep(a) => sweep::run(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.record());
            ExitCode::from(e.exit_code())
        }
    }
}
