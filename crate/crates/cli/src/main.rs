//! `wavectl`: batch front end for the steering pipeline.
//!
//! Exit codes: 0 success, 1 solver or verification failure, 2 usage,
//! configuration or I/O error.

mod commands;
mod config;
mod svg;

use clap::{Parser, Subcommand};
use commands::{Outcome, Setup};
use config::Config;
use std::path::PathBuf;
use std::process::ExitCode;
use wavectl_core::WaveError;

#[derive(Parser)]
#[command(name = "wavectl", version, about = "Steer the damped semilinear wave equation through its attractor")]
struct Cli {
    /// Key-value configuration file; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides WAVECTL_OUT and the configuration).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Enumerate equilibria with their spectra.
    Equilibria,
    /// Build the connection graph and its phase portrait.
    Attractor,
    /// Steer V0 to V1 and verify the result.
    Control {
        /// State file, or `eq:<label>` for an equilibrium at rest.
        #[arg(long)]
        v0: String,
        #[arg(long)]
        v1: String,
    },
    /// Steering time over seeded pairs from a ball.
    Survey {
        #[arg(long)]
        radius: f64,
        #[arg(long)]
        samples: usize,
    },
}

fn exit_code(err: &WaveError) -> u8 {
    match err {
        WaveError::Config(_) | WaveError::Io(_) | WaveError::Format(_) | WaveError::Argument(_) | WaveError::Dimension { .. } => 2,
        _ => 1,
    }
}

fn run(cli: Cli) -> Result<Outcome, WaveError> {
    let cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    let out = cli
        .out
        .or_else(|| std::env::var_os("WAVECTL_OUT").map(PathBuf::from))
        .unwrap_or_else(|| cfg.output.clone());
    let setup = Setup::new(cfg, out)?;
    match cli.command {
        Command::Equilibria => commands::equilibria(&setup),
        Command::Attractor => commands::attractor(&setup),
        Command::Control { v0, v1 } => commands::control(&setup, &v0, &v1),
        Command::Survey { radius, samples } => commands::survey(&setup, radius, samples),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(Outcome::Success) => ExitCode::SUCCESS,
        Ok(Outcome::Failed(why)) => {
            eprintln!("wavectl: {why}");
            ExitCode::from(1)
        }
        Err(err) => {
            eprintln!("wavectl: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
