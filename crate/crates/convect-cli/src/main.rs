//! Command-line front end for the spectral Darcy-Benard solver: simulation
//! runs, decay-threshold certification, randomized estimate verification,
//! parameter sweeps, and a finite-difference cross-check. Every subcommand
//! writes machine-readable records under a single output root.

mod commands;
mod config;
mod output;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

/// Failure classes and their exit codes: configuration or environment
/// problems exit 1, numerical failures (blow-up, lost convergence) exit 2,
/// violated mathematical properties exit 3.
#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Numerical(String),
    Violation(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Numerical(_) => 2,
            CliError::Violation(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(msg) => write!(f, "{msg}"),
            CliError::Numerical(msg) => write!(f, "numerical failure: {msg}"),
            CliError::Violation(msg) => write!(f, "property violation: {msg}"),
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "convect",
    version,
    about = "Spectral solver and estimate checks for compressible Darcy-Benard convection"
)]
struct Cli {
    /// Output directory; defaults to $CONVECT_OUT_DIR, then the working
    /// directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Time-march the perturbation system and record diagnostics.
    Simulate(commands::SimulateArgs),
    /// Tabulate certified decay thresholds over a compressibility grid.
    Certify(commands::CertifyArgs),
    /// Run one of the randomized estimate-verification suites.
    Verify(commands::VerifyArgs),
    /// Run a grid of simulations over Rayleigh and compressibility values.
    Sweep(commands::SweepArgs),
    /// Compare the spectral pressure solve against the finite-difference
    /// solver under grid refinement.
    CrossValidate(commands::CrossValidateArgs),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests arrive as errors but are not failures.
            let code = u8::from(e.use_stderr());
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let out = cli
        .out
        .or_else(|| std::env::var_os("CONVECT_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    let result = match &cli.command {
        Command::Simulate(args) => commands::simulate(&out, args),
        Command::Certify(args) => commands::certify(&out, args),
        Command::Verify(args) => commands::verify(&out, args),
        Command::Sweep(args) => commands::sweep(&out, args),
        Command::CrossValidate(args) => commands::cross_validate(&out, args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
