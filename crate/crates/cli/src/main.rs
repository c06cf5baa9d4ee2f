//! `ies`: command-line front end for integer mutation experiments and
//! integer evolution strategies.
//!
//! Exit codes: 0 on success, 2 for usage or configuration errors, 3 when
//! required input files are missing, 1 for anything else.

mod commands;
mod config;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::{BenchFlags, EntropyFlags, OptimizeFlags, PmfFlags, ReportFlags, SampleFlags, ScanCommand};
use crate::config::ConfigArgs;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    MissingInput(String),
    #[error(transparent)]
    Core(#[from] ies_core::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use ies_core::Error as E;
        match self {
            Self::Usage(_) => 2,
            Self::MissingInput(_) => 3,
            Self::Core(
                E::ParamDomain(_)
                | E::DimensionMismatch { .. }
                | E::IndexOutOfRange(_)
                | E::UnsupportedKind(_)
                | E::InvalidInstance(_)
                | E::InvalidConfig(_),
            ) => 2,
            Self::Core(_) | Self::Io(_) => 1,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "ies", version, about = "Integer mutation distributions and integer evolution strategies")]
struct Cli {
    #[command(flatten)]
    common: ConfigArgs,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Tabulate a probability mass function
    Pmf(PmfFlags),
    /// Draw mutation vectors
    Sample(SampleFlags),
    /// Exact entropies of the four distributions over a step-size grid
    Entropy(EntropyFlags),
    /// Monte-Carlo scans
    #[command(subcommand)]
    Scan(ScanCommand),
    /// Run one strategy on one problem and write its run log
    Optimize(OptimizeFlags),
    /// Run a benchmark campaign over the 24-instance quadratic suite
    Bench(BenchFlags),
    /// Aggregate run logs into fixed-budget and dominance tables
    Report(ReportFlags),
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    let common = &cli.common;
    std::fs::create_dir_all(&common.out)?;
    match &cli.command {
        Command::Pmf(flags) => commands::pmf(common, flags),
        Command::Sample(flags) => commands::sample(common, flags),
        Command::Entropy(flags) => commands::entropy(common, flags),
        Command::Scan(scan) => commands::scan(common, scan),
        Command::Optimize(flags) => commands::optimize(common, flags),
        Command::Bench(flags) => commands::bench(common, flags),
        Command::Report(flags) => commands::report(common, flags),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
