//! Batch front end for the relaxation-time inversion library: generates
//! synthetic spectra, inverts single realizations, runs parameter
//! sweeps, and emits operator diagnostics as CSV and JSON plot data.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage error.

mod commands;
mod config;
mod export;

use clap::{Parser, Subcommand};

use config::{CommonArgs, RunConfig, UsageError};

#[derive(Debug, Parser)]
#[command(
    name = "drt",
    version,
    about = "Reconstructs distribution-of-relaxation-times densities from impedance spectra"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write synthetic spectra: one exact file plus one noisy file per seed
    Generate {
        #[command(flatten)]
        common: CommonArgs,
        /// Also write the truth density sampled on the solution grid
        #[arg(long)]
        truth: bool,
    },
    /// Solve one noisy realization and report the chosen parameter
    Invert {
        #[command(flatten)]
        common: CommonArgs,
        /// Parameter selection: fixed, ncp, or lcurve
        #[arg(long)]
        select: Option<String>,
        /// Regularization parameter, required with --select fixed
        #[arg(long)]
        lambda: Option<f64>,
    },
    /// Run every seed against the parameter grid and aggregate
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Operator diagnostics
    Analyze {
        #[command(flatten)]
        common: CommonArgs,
        #[command(subcommand)]
        what: AnalyzeCommand,
    },
}

#[derive(Debug, Subcommand)]
enum AnalyzeCommand {
    /// Condition numbers of the four kernel matrices over the standard ranges
    Condition,
    /// Singular values, data coefficients, and their ratios on one realization
    Picard,
    /// Per-frequency quadrature error of every rule for a single process
    QuadError {
        /// Characteristic relaxation time of the probe process
        #[arg(long, default_value_t = 0.1)]
        t0: f64,
        /// Depression exponent of the probe process (rq model)
        #[arg(long, default_value_t = 0.5)]
        beta: f64,
        /// Log-time spread of the probe process (ln model)
        #[arg(long, default_value_t = 1.0986122886681098)]
        sigma: f64,
    },
    /// Whiteness classification of the singular basis vectors
    BasisNcp,
}

fn run(cli: Cli) -> anyhow::Result<i32> {
    match cli.command {
        Command::Generate { common, truth } => {
            let cfg = RunConfig::resolve(&common, None, None)?;
            commands::generate::run(&cfg, truth)
        }
        Command::Invert {
            common,
            select,
            lambda,
        } => {
            let cfg = RunConfig::resolve(&common, select.as_deref(), lambda)?;
            commands::invert::run(&cfg)
        }
        Command::Sweep { common } => {
            let cfg = RunConfig::resolve(&common, None, None)?;
            commands::sweep::run(&cfg)
        }
        Command::Analyze { common, what } => {
            let cfg = RunConfig::resolve(&common, None, None)?;
            match what {
                AnalyzeCommand::Condition => commands::analyze::condition(&cfg),
                AnalyzeCommand::Picard => commands::analyze::picard(&cfg),
                AnalyzeCommand::QuadError { t0, beta, sigma } => {
                    commands::analyze::quad_error(&cfg, t0, beta, sigma)
                }
                AnalyzeCommand::BasisNcp => commands::analyze::basis(&cfg),
            }
        }
    }
}

fn main() {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(code) => code,
        Err(e) => {
            if e.downcast_ref::<UsageError>().is_some() {
                eprintln!("error: {e}");
                2
            } else {
                eprintln!("error: {e:#}");
                1
            }
        }
    };
    std::process::exit(code);
}
