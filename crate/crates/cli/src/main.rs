//! `finobs` — configuration-driven certification and audit runs.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use finobs::pipeline::AuditMode;

/// Process exit codes.
pub mod exit {
    pub const PASS: u8 = 0;
    pub const OTHER: u8 = 1;
    pub const CERTIFICATION: u8 = 2;
    pub const AUDIT: u8 = 3;
    pub const CONFIG: u8 = 4;
}

#[derive(Debug, Parser)]
#[command(
    name = "finobs",
    version,
    about = "Certify and audit final-state observability estimates"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Certify,
    Diagnostic,
}

impl From<ModeArg> for AuditMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Certify => AuditMode::Certify,
            ModeArg::Diagnostic => AuditMode::Diagnostic,
        }
    }
}

#[derive(Debug, clap::Args)]
pub struct Common {
    /// Experiment configuration (JSON).
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; created if missing.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Overrides the seed of the configuration.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum, default_value = "certify")]
    pub mode: ModeArg,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Certify the dissipation constants (d2, d3, γ2, γ3, γ4).
    CertifyDe(Common),
    /// Certify the uncertainty constants (d0, d1, γ1).
    CertifyUcp(Common),
    /// Certify (or load) a constant bundle and derive the observability constants.
    Constants {
        #[command(flatten)]
        common: Common,
        /// Bundle written by an earlier run.
        #[arg(long)]
        bundle: Option<PathBuf>,
    },
    /// Build the density-point sequence of the time set.
    DensitySeq(Common),
    /// Run every audit and write the full report.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        bundle: Option<PathBuf>,
    },
    /// Summarize a report written by `verify`.
    Report {
        /// Directory holding `report.json`.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(failure) => {
            eprintln!("error: {:#}", failure.error);
            ExitCode::from(failure.code)
        }
    }
}
