//! Command-line front end for the `ddpilot` pilot-design library.

pub mod commands;
pub mod config;
pub mod error;
pub mod table;

use std::fs::File;
use std::io::{self, BufWriter};
use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use commands::SweepKind;
pub use config::LoadedConfig;
pub use error::CliError;
pub use table::{Cell, Format, Table};

#[derive(Debug, Parser)]
#[command(name = "ddpilot", version, about = "Pilot-pattern design for doubly dispersive OFDM channels")]
pub struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file; stdout when omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Overrides `mse.seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Approximation error sweeps.
    ApproxError {
        #[arg(long, value_enum, default_value_t = SweepKind::Dimension)]
        sweep: SweepKind,
    },
    /// Feasibility of the configured lattice, with the mask spectrum.
    LatticeCheck,
    /// Feasible lattices of index `lattice.L`.
    LatticeSearch,
    /// Closed-form lower bound under both diagonal-count conventions.
    Bound,
    /// Monte Carlo MSE of the configured lattice against `tr(C_e)`.
    Mse,
}

/// Runs the parsed command, writing the table before any deferred failure.
pub fn run(cli: &Cli) -> Result<(), CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("--config is required".into()))?;
    let cfg = LoadedConfig::from_path(path)?;
    let outcome = match cli.command {
        Command::ApproxError { sweep } => commands::approx_error(&cfg, sweep)?,
        Command::LatticeCheck => commands::lattice_check(&cfg)?,
        Command::LatticeSearch => commands::lattice_search(&cfg)?,
        Command::Bound => commands::bound(&cfg)?,
        Command::Mse => commands::mse(&cfg, cli.seed)?,
    };
    match &cli.out {
        Some(p) => {
            let f = File::create(p).map_err(|e| CliError::Config(format!("cannot create {}: {e}", p.display())))?;
            outcome.table.write(cli.format, BufWriter::new(f))?;
        }
        None => outcome.table.write(cli.format, io::stdout().lock())?,
    }
    match outcome.deferred {
        Some(e) => Err(e),
        None => Ok(()),
    }
}
