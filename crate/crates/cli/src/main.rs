//! `spincell` command-line tool.
//!
//! Every command writes into a fresh run directory (by default
//! `$SPINCELL_RUNS_DIR/<timestamp>_<command>`, falling back to `./runs`)
//! that ends with a `manifest.json` listing each file and its SHA-256.
//! Exit status: 0 on success, 1 on usage or validation errors, 2 when a
//! solver or I/O step fails.

mod commands;
mod run_dir;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use spincell_core::acceptance::DEFAULT_SEED;

pub const RUNS_DIR_ENV: &str = "SPINCELL_RUNS_DIR";

#[derive(Debug, Parser)]
#[command(name = "spincell", version, about = "Spin dynamics and thermal modelling of miniature Cs vapour cells")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// JSON configuration (cell config, or layout for `thermal` and `bfield`).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Run directory to create. Must not exist yet.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Master seed.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Worker threads for scans.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// More log output on stderr (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Vapour properties.
    #[command(subcommand)]
    Vapor(VaporCommand),
    /// Synthesize or fit rf spectra.
    #[command(subcommand)]
    Spectrum(SpectrumCommand),
    /// Parameter scans.
    #[command(subcommand)]
    Scan(ScanCommand),
    /// Steady-state thermal model of the cell stack.
    #[command(subcommand)]
    Thermal(ThermalCommand),
    /// Heater stray field.
    #[command(subcommand)]
    Bfield(BfieldCommand),
    /// Acceptance suite.
    #[command(subcommand)]
    Acceptance(AcceptanceCommand),
}

#[derive(Debug, Subcommand)]
pub enum VaporCommand {
    /// Density, spin-exchange, diffusion and optical properties per temperature.
    Props,
}

#[derive(Debug, Subcommand)]
pub enum SpectrumCommand {
    /// Synthesize a noisy lock-in spectrum for the configured cell.
    Synth,
    /// Fit a spectrum CSV with one or two complex Lorentzians.
    Fit {
        /// Spectrum CSV (frequency_hz, x, y).
        #[arg(long)]
        input: PathBuf,
        /// JSON sidecar with flagged points and metadata.
        #[arg(long)]
        sidecar: Option<PathBuf>,
        /// Force the number of components instead of model selection.
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
        components: Option<u8>,
    },
}

#[derive(Debug, Clone, Args)]
pub struct ScanArgs {
    /// Override the number of repeats per value.
    #[arg(long)]
    pub repeats: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum ScanCommand {
    PumpPower(ScanArgs),
    Temperature(ScanArgs),
    Larmor(ScanArgs),
}

#[derive(Debug, Subcommand)]
pub enum ThermalCommand {
    /// Solve the temperature field and export grid, trace and summary.
    Solve {
        /// Override the voxel pitch, mm.
        #[arg(long)]
        pitch_mm: Option<f64>,
    },
}

#[derive(Debug, Subcommand)]
pub enum BfieldCommand {
    /// Field map and interaction-chamber field figures.
    Map {
        /// Heater current, A. Defaults to the operating current of the thermal solve.
        #[arg(long)]
        current_a: Option<f64>,
    },
}

#[derive(Debug, Subcommand)]
pub enum AcceptanceCommand {
    /// Run the acceptance criteria and write a pass/fail table.
    Run {
        /// Comma-separated criterion numbers (default: all).
        #[arg(long, value_delimiter = ',')]
        criteria: Vec<u32>,
    },
}

/// Usage or input error detected by the tool itself.
#[derive(Debug)]
pub struct Invalid(pub String);

impl fmt::Display for Invalid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Invalid {}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<Invalid>() || cause.is::<serde_json::Error>() {
            return 1;
        }
        if let Some(e) = cause.downcast_ref::<spincell_core::Error>() {
            return if e.is_validation() { 1 } else { 2 };
        }
    }
    2
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let level = match cli.global.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).init();

    match commands::dispatch(&cli) {
        Ok(dir) => {
            println!("results written to {}", dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
