//! Command line front end: evolve a configured graph, verify the discrete
//! geometry, fit refinement orders, or tabulate slice curvatures. Exit code
//! 0 means the command ran and its acceptance condition held; everything
//! else is 1 with a diagnostic on stderr.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::parse_config;

#[derive(Parser)]
#[command(
    name = "pmcflow",
    version,
    about = "Prescribed mean curvature flow for graphs over a flat torus"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve the configured graph and write the run artifacts
    Evolve {
        #[arg(long)]
        config: PathBuf,
    },
    /// Cross-check the discrete geometry on the configured model and grid
    Verify {
        #[arg(long)]
        config: PathBuf,
        /// flip a sign in the ambient connection fed to the curvature
        /// oracle; the dual-route check must then fail (test hook)
        #[arg(long, hide = true)]
        corrupt_model: bool,
    },
    /// Rerun a reference scenario over several grids and fit the order
    Refine {
        #[arg(long)]
        config: PathBuf,
        /// comma separated point counts, e.g. 32,64,128
        #[arg(long, value_delimiter = ',', required = true)]
        levels: Vec<usize>,
    },
    /// Tabulate the slice mean curvature of the model over a time range
    SliceScan {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, allow_negative_numbers = true)]
        from: f64,
        #[arg(long, allow_negative_numbers = true)]
        to: f64,
        #[arg(long)]
        steps: usize,
    },
}

fn main() -> ExitCode {
    // usage mistakes share exit code 1 with every other failure; only help
    // and version requests leave with 0
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let failed = err.use_stderr();
            let _ = err.print();
            return if failed {
                ExitCode::FAILURE
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Evolve { config } => {
            parse_config(&config).and_then(|config| commands::run_evolve(&config))
        }
        Command::Verify {
            config,
            corrupt_model,
        } => parse_config(&config).and_then(|config| commands::run_verify(&config, corrupt_model)),
        Command::Refine { config, levels } => {
            parse_config(&config).and_then(|config| commands::run_refine(&config, &levels))
        }
        Command::SliceScan {
            config,
            from,
            to,
            steps,
        } => parse_config(&config)
            .and_then(|config| commands::run_slice_scan(&config, from, to, steps)),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::FAILURE
        }
    }
}
