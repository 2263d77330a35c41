//! `snls`: run ensembles of the damped stochastic NLS and check them.
//!
//! Exit codes: 0 success, 1 a verification failed, 2 configuration or I/O
//! error, 3 a trajectory blew up (results are still written).

mod commands;
mod config;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

/// Overrides `run.workers`.
pub const WORKERS_ENV: &str = "SNLS_WORKERS";

#[derive(Parser)]
#[command(name = "snls", version, about = "Spectral Monte Carlo for the damped stochastic NLS")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the ensemble and write per-observable CSVs, summary.csv and a manifest.
    Simulate { config: PathBuf },
    /// Run the ensemble and evaluate one diagnostic.
    Verify {
        config: PathBuf,
        #[arg(long, value_enum)]
        check: Check,
    },
    /// Krylov-Bogolyubov averages of the mass at several horizons.
    Kb {
        config: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        horizons: Vec<f64>,
        #[arg(long, default_value = "mass")]
        observable: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Check {
    Mass,
    Energy,
    Transient,
    Stationary,
    Aldous,
    Tail,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok = 0,
    Failed = 1,
    BadConfig = 2,
    BlowUp = 3,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate { config } => commands::simulate(&config),
        Command::Verify { config, check } => commands::verify(&config, check),
        Command::Kb {
            config,
            horizons,
            observable,
        } => commands::kb(&config, &horizons, &observable),
    };
    let status = result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        Status::BadConfig
    });
    ExitCode::from(status as u8)
}
