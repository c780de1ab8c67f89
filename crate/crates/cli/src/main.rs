//! `cqad`: batch front-end for device validation, unhybridized and hybridized
//! analyses, mode classification and loss budgets.

mod commands;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::error::CliError;

#[derive(Parser)]
#[command(name = "cqad", version, about = "Hybrid qubit/bulk-acoustic device analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Device description (TOML).
    config: PathBuf,
    /// Output directory [default: ./cqad-out].
    #[arg(long, env = "CQAD_OUT_DIR")]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// List every violated config invariant; exit 0 iff none.
    Validate {
        config: PathBuf,
    },
    /// Bare qubit and acoustic modes with their overlap couplings.
    Unhybridized(Common),
    /// Inductance sweep, EPRs, Kerr table and loss budgets.
    Hybridized {
        #[command(flatten)]
        common: Common,
        /// Also run the monolithic avoided-crossing check per family.
        #[arg(long)]
        cross_check: bool,
    },
    /// Label hybrid modes as LG/HG/qubit/spurious.
    Classify(Common),
    /// Loss budgets of the modes at the dispersive point.
    Loss(Common),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Validate { config } => commands::validate(&config),
        Command::Unhybridized(c) => commands::run(&c.config, c.out, "unhybridized", commands::unhybridized),
        Command::Hybridized { common, cross_check } => {
            commands::run(&common.config, common.out, "hybridized", |d, o| commands::hybridized(d, o, cross_check))
        }
        Command::Classify(c) => commands::run(&c.config, c.out, "classify", commands::classify),
        Command::Loss(c) => commands::run(&c.config, c.out, "loss", commands::loss),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if let CliError::Stage { source: cqad_core::Error::Config { .. }, .. } | CliError::Load { .. } = &e {
                eprintln!("hint: run `cqad validate` on the config for a full list of problems");
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
