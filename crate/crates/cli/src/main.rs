//! `phasekick` — scenario runner for the phase-space measurement library.
//!
//! Exit codes: 0 success, 2 config error, 3 tolerance failure,
//! 4 numerical abort.

mod commands;
mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::CliError;
use config::RunConfig;

#[derive(Parser)]
#[command(name = "phasekick", version, about = "Phase-space measurement scenario runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve a scenario with the closed-form propagator and write chi grids.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the seed in the config file.
        #[arg(long)]
        seed: Option<u64>,
        /// Also integrate the master equation and record deviations.
        #[arg(long)]
        compare_oracle: bool,
        #[arg(long, default_value = "strict")]
        tolerance_profile: String,
    },
    /// Run closed form, RK4, and Monte-Carlo on one scenario and compare.
    Compare {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "strict")]
        tolerance_profile: String,
    },
    /// Bogoliubov normal form of z1 a†a + z2 a†² + z2* a² + z3 a† + z3* a.
    Diagonalize {
        #[arg(long)]
        z1: f64,
        /// Complex: "0.6", "0.6,0.1", or "0.6+0.1i".
        #[arg(long, default_value = "0")]
        z2: String,
        #[arg(long, default_value = "0")]
        z3: String,
    },
    /// Draw POVM outcomes for the configured state and write them as CSV.
    Sample {
        #[arg(long)]
        config: PathBuf,
        /// Output CSV path (stdout if omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long)]
        seed: Option<u64>,
        /// Mean occupation of the thermal apparatus state (0 = vacuum).
        #[arg(long, default_value_t = 0.0)]
        nbar: f64,
    },
    /// Canned cat-state snapshot scenario (chi grids at t = 0 and 1).
    Figure1 {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        compare_oracle: bool,
    },
}

fn load(path: &PathBuf, seed: Option<u64>) -> Result<(RunConfig, Vec<u8>), CliError> {
    let (mut cfg, bytes) = RunConfig::load(path)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok((cfg, bytes))
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run { config, out, seed, compare_oracle, tolerance_profile } => {
            let (cfg, bytes) = load(&config, seed)?;
            commands::run(&cfg, &bytes, &out, compare_oracle, &tolerance_profile)?;
            Ok(())
        }
        Command::Compare { config, out, seed, tolerance_profile } => {
            let (cfg, bytes) = load(&config, seed)?;
            commands::compare(&cfg, &bytes, &out, &tolerance_profile)?;
            Ok(())
        }
        Command::Diagonalize { z1, z2, z3 } => {
            println!("{}", commands::diagonalize_cmd(z1, &z2, &z3)?);
            Ok(())
        }
        Command::Sample { config, out, n, seed, nbar } => {
            let (cfg, _) = load(&config, seed)?;
            commands::sample(&cfg, out.as_ref(), n, nbar)
        }
        Command::Figure1 { out, compare_oracle } => {
            let cfg = commands::figure1_config();
            let bytes = serde_json::to_vec_pretty(&cfg)
                .map_err(|e| CliError::Numerical(e.to_string()))?;
            commands::run(&cfg, &bytes, &out, compare_oracle, "strict")?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(match e {
                CliError::Config(_) => 2,
                CliError::Tolerance(_) => 3,
                CliError::Numerical(_) => 4,
            })
        }
    }
}
