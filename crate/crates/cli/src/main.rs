use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sel3d::diagnose::{diagnose, read_bumps, write_report};
use sel3d::scan::{scan, write_reports, ScanOptions};
use sel3d::simulate::simulate;
use sel3d::stats::{noise_stats, write_stats};
use sel3d::{CliError, RunConfig};

#[derive(Parser)]
#[command(name = "sel3d", version, about = "Stochastic Ericksen-Leslie simulator on the three-torus")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a configuration and write snapshots plus energy.csv.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Energy residuals, suitability margins and bound ingredients.
    Diagnose {
        #[arg(long = "in")]
        input: PathBuf,
        /// TOML file of `[[bump]]` tables.
        #[arg(long)]
        bumps: Option<PathBuf>,
        /// Same run at a finer time step, for the refinement ratio.
        #[arg(long)]
        refined: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Classify cylinders and build the cover of the unresolved ones.
    Scan {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        eps0: Option<f64>,
        #[arg(long)]
        eps1: Option<f64>,
        #[arg(long = "M")]
        m: Option<f64>,
        #[arg(long)]
        radius: Option<f64>,
        #[arg(long, default_value_t = 4)]
        lattice: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Trace, stationary variances, Hölder slope and sup-norm moments.
    NoiseStats {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate { config, out } => {
            let cfg = RunConfig::from_file(&config)?;
            let summary = simulate(&cfg, &out)?;
            log::info!(
                "{} steps, {} snapshots, max |d| = {}, relative energy residual = {:e}",
                summary.steps,
                summary.snapshots,
                summary.max_director,
                summary.integrated_relative_residual
            );
        }
        Command::Diagnose {
            input,
            bumps,
            refined,
            out,
        } => {
            let bumps = match bumps {
                Some(p) => read_bumps(&p)?,
                None => Vec::new(),
            };
            let rows = diagnose(&input, &bumps, refined.as_deref())?;
            write_report(&out, &rows)?;
        }
        Command::Scan {
            input,
            eps0,
            eps1,
            m,
            radius,
            lattice,
            out,
        } => {
            let options = ScanOptions {
                eps0,
                eps1,
                m,
                radius,
                lattice,
            };
            let result = scan(&input, &options)?;
            write_reports(&out, &result)?;
        }
        Command::NoiseStats { config, out } => {
            let cfg = RunConfig::from_file(&config)?;
            write_stats(&out, &noise_stats(&cfg)?)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
