//! `dynprobit` command-line front end.
//!
//! ```text
//! dynprobit simulate [--config cfg.json] [--out DIR] [--seed S]
//! dynprobit fit      [--config cfg.json] --data data.csv [--out DIR] [--method iid|pfm|mf|all] [--draws R] [--seed S]
//! dynprobit compare  [--config cfg.json] --data data.csv [--out DIR] [--draws R] [--seed S]
//! ```
//!
//! Exit codes: 0 success, 1 I/O failure, 2 configuration error, 3 data
//! error, 4 numerical error.

pub mod commands;
pub mod config;
pub mod io;

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use thiserror::Error;

pub use config::{CovariateDesign, MatrixSpec, MethodChoice, RunConfig, SamplerSection};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("numerical error: {0}")]
    Numerical(#[from] crate::Error),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "dynprobit", version, about = "Smoothing for dynamic probit models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Data CSV with header `t,y,x1..xp`.
    #[arg(long, global = true)]
    pub data: Option<PathBuf>,
    /// Output directory (created if missing).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub method: Option<MethodChoice>,
    /// Number of i.i.d. smoothing draws.
    #[arg(long, global = true)]
    pub draws: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate covariates, states and responses from the model.
    Simulate,
    /// Fit one or all methods and write per-time moments.
    Fit,
    /// Fit all methods and compare the approximations against i.i.d. sampling.
    Compare,
}

impl Cli {
    /// Loads the config (or defaults) and applies flag overrides.
    pub fn resolve_config(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(data) = &self.data {
            cfg.data = Some(data.clone());
        }
        if let Some(out) = &self.out {
            cfg.out = Some(out.clone());
        }
        if let Some(method) = self.method {
            cfg.method = method;
        }
        if let Some(draws) = self.draws {
            cfg.draws = draws;
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = cli.resolve_config()?;
    match cli.command {
        Command::Simulate => commands::simulate(&cfg),
        Command::Fit => commands::fit(&cfg),
        Command::Compare => commands::compare(&cfg),
    }
}

/// Entry point for the binary; returns the process exit code.
pub fn main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("dynprobit: {e}");
            e.exit_code()
        }
    }
}
