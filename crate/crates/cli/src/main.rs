//! `chirpqpm`: pattern design, SHG/SPDC spectra, bandwidth extraction and
//! photon-counting analysis from a TOML run configuration.

mod commands;
mod config;
mod error;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::Context;
use crate::config::RunConfig;
use crate::error::{usage, CliError};

#[derive(Debug, Parser)]
#[command(name = "chirpqpm", version, about = "Step-chirped QPM waveguide design and photon-pair analysis")]
struct Cli {
    /// TOML run configuration; defaults are used for anything it omits.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    /// Seed for simulate-counts (overrides the config).
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
    /// Evaluate dispersion outside its valid range (points are flagged).
    #[arg(long, global = true)]
    allow_extrapolation: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Generate the domain pattern and its summary.
    Design,
    /// Theoretical normalized SHG efficiency over an FH grid.
    ShgSpectrum,
    /// SPDC pair density and its bandwidth report.
    SpdcSpectrum,
    /// Bandwidth report of a spectrum CSV.
    Bandwidth,
    /// Coincidence histogram, CAR, PGR and brightness from timestamps.
    AnalyzeCounts,
    /// Seeded synthetic signal/idler timestamps.
    SimulateCounts,
}

fn run(cli: Cli) -> Result<Vec<PathBuf>, CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(usage("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(usage)?;
    }
    let cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let ctx = Context {
        cfg,
        out: cli.out,
        seed: cli.seed,
        allow_extrapolation: cli.allow_extrapolation,
    };
    match cli.command {
        Command::Design => commands::design(&ctx),
        Command::ShgSpectrum => commands::shg_spectrum(&ctx),
        Command::SpdcSpectrum => commands::spdc_spectrum(&ctx),
        Command::Bandwidth => commands::bandwidth(&ctx),
        Command::AnalyzeCounts => commands::analyze_counts(&ctx),
        Command::SimulateCounts => commands::simulate_counts(&ctx),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(written) => {
            for path in written {
                println!("{}", path.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
