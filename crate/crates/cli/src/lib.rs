//! Command-line harness around `foias-core`: TOML experiment configs,
//! flat-table measure files, CSV/JSON reports and a fixed exit-code contract
//! (0 ok, 1 usage or parse error, 2 non-contraction, 3 numeric failure).

pub mod commands;
pub mod config;
pub mod error;
pub mod table;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "foias", version, about = "Invariant measures of driven systems")]
pub struct Cli {
    /// Experiment configuration (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the `seed` of the configuration.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Directory for output files.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate or certify the contraction constant.
    Certify,
    /// Solve for the invariant measure.
    Invariant,
    /// Continuity sweep over a family of input laws.
    Sweep,
    /// Window-measure checks in sequence space.
    Seq,
    /// W1 distance between two measure files.
    Wasserstein {
        mu: PathBuf,
        nu: PathBuf,
        /// euclidean, capped:C or window:T
        #[arg(long, default_value = "euclidean")]
        metric: String,
        /// Also write the optimal plan as a row,col,mass table.
        #[arg(long)]
        plan: Option<PathBuf>,
    },
    /// Write one simulated trajectory.
    Simulate,
}

/// Runs a parsed command line and returns the exit code.
pub fn run(cli: &Cli) -> Result<u8, CliError> {
    if let Command::Wasserstein { mu, nu, metric, plan } = &cli.command {
        println!("{}", commands::wasserstein(mu, nu, metric, plan.as_deref())?);
        return Ok(0);
    }
    let Some(path) = &cli.config else {
        return Err(CliError::Usage("--config is required".into()));
    };
    let x = commands::Experiment::new(config::Config::load(path)?, cli.seed, &cli.out)?;
    match cli.command {
        Command::Certify => commands::certify(&x),
        Command::Invariant => commands::invariant(&x),
        Command::Sweep => commands::sweep(&x),
        Command::Seq => commands::seq(&x),
        Command::Simulate => commands::simulate(&x),
        Command::Wasserstein { .. } => unreachable!("handled above"),
    }
}
