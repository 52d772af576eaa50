//! `phtrip`: run, verify and compare wave-system scenarios.
//!
//! Exit codes: 0 success, 1 a verification check failed, 2 the scenario or
//! command line is malformed (or a file cannot be read or written), 3 a
//! numeric gate rejected the scenario.

mod commands;
mod output;
mod scenario;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use thiserror::Error;

use commands::Suite;
use scenario::Scenario;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("schema error: {0}")]
    Schema(String),
    #[error("{kind}: {source}", kind = .source.kind())]
    Numeric {
        #[from]
        source: phtrip::Error,
    },
    #[error("verification failed: {0}")]
    Check(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Check(_) => 1,
            CliError::Schema(_) | CliError::Io(_) => 2,
            CliError::Numeric { .. } => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "phtrip", version, about = "Boundary-node simulations of the damped wave equation")]
struct Cli {
    /// Scenario file (JSON, schema_version 1).
    #[arg(long, global = true)]
    scenario: Option<PathBuf>,
    /// CSV destination; overrides the scenario's `out`. Defaults to stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Property suite for `verify`.
    #[arg(long, global = true, value_enum, default_value = "all")]
    suite: Suite,
    /// Doubles Γ1 before the Green checks.
    #[arg(long, global = true, hide = true)]
    corrupt_gamma1: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate the scenario and write its energy ledger as CSV.
    Simulate,
    /// Run structural property checks on the scenario's system.
    Verify,
    /// Simulate both formulations and write their per-step deviation as CSV.
    JetCompare,
    /// Print the node maps before and after the external Cayley transform.
    Cayley,
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let path = cli.scenario.as_ref().ok_or_else(|| CliError::Schema("--scenario <path> is required".into()))?;
    let scenario = Scenario::load(path)?;
    let out = cli.out.clone().or_else(|| scenario.out.clone());
    let setup = scenario.setup()?;
    match cli.command {
        Command::Simulate => commands::simulate_cmd(&setup, out.as_deref()),
        Command::JetCompare => commands::jet_compare_cmd(&setup, out.as_deref()),
        Command::Cayley => commands::cayley_cmd(&setup),
        Command::Verify => match commands::verify_cmd(&setup, cli.suite, cli.corrupt_gamma1)? {
            None => Ok(()),
            Some(name) => Err(CliError::Check(name.to_string())),
        },
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
