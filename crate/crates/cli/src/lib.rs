//! Command-line driver: configuration, sub-commands and report emission.
//!
//! Exit codes: 0 when every check passes, 1 on a verification failure or a
//! numerical error, 2 on a configuration or usage error.

pub mod commands;
pub mod config;
pub mod fixture;
pub mod report;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::config::Config;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("numerical error: {0}")]
    Numerics(#[from] ancientflow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) | CliError::Numerics(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "ancientflow", version, about = "Verification suites for mean curvature flow in space forms")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct GlobalArgs {
    /// TOML configuration file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for randomised commands.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Sample count for randomised sweeps.
    #[arg(long, global = true)]
    pub samples: Option<u64>,
    /// Grid size: `x` grid points for scans, intervals for flows.
    #[arg(long, global = true)]
    pub grid: Option<usize>,
    /// Fixed time step for flows.
    #[arg(long, global = true)]
    pub dt: Option<f64>,
    /// Output directory for reports.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Overrides the pass/fail tolerance of the command.
    #[arg(long, global = true)]
    pub tolerance: Option<f64>,
    /// Sobolev constant `B` used by the integral checks.
    #[arg(long, global = true)]
    pub sobolev_constant: Option<f64>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Randomised sweep of the pointwise curvature inequalities.
    VerifyTensor {
        /// Multiplies every inequality's right-hand side (fault injection).
        #[arg(long, hide = true, default_value_t = 1.0)]
        fault_rhs_scale: f64,
    },
    /// Sign certificates and tables for the scalar auxiliary functions.
    ScanFunctions,
    /// Runs the rotational flow and its monitors.
    Simulate(FlowArgs),
    /// Tabulates the exact shrinking-sphere families.
    Oracle {
        /// `hyperbolic`, `sphere`, `euclidean` or `all`.
        #[arg(long)]
        family: Option<String>,
        #[arg(long)]
        n: Option<usize>,
    },
    /// Integral functionals, Gauss–Bonnet and the integral monitors.
    Functionals(FlowArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct FlowArgs {
    /// Fixture id, e.g. `hyperbolic-sphere` or `perturbed-sphere-S3`.
    #[arg(long)]
    pub fixture: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub t0: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub t1: Option<f64>,
    /// Monitor id; repeatable.
    #[arg(long = "monitor")]
    pub monitors: Vec<String>,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::VerifyTensor { .. } => "verify-tensor",
            Command::ScanFunctions => "scan-functions",
            Command::Simulate(_) => "simulate",
            Command::Oracle { .. } => "oracle",
            Command::Functionals(_) => "functionals",
        }
    }
}

/// Result of one command: overall verdict plus human-readable summary lines.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub passed: bool,
    pub lines: Vec<String>,
}

impl Outcome {
    pub fn new() -> Self {
        Self { passed: true, lines: Vec::new() }
    }

    /// Records a named check.
    pub fn check(&mut self, name: &str, ok: bool, detail: impl std::fmt::Display) {
        self.passed &= ok;
        self.lines.push(format!("{} {name}: {detail}", if ok { "ok  " } else { "FAIL" }));
    }

    pub fn note(&mut self, line: impl Into<String>) {
        self.lines.push(line.into());
    }
}

/// Caps rayon's pool from `ANCIENTFLOW_THREADS`.
pub fn init_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("ANCIENTFLOW_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| CliError::Config(format!("ANCIENTFLOW_THREADS must be a positive integer, got {raw:?}")))?;
    // a second initialisation in the same process keeps the first pool
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    Ok(())
}

/// Loads the configuration file (if any) and runs the command.
pub fn execute(cli: &Cli) -> Result<Outcome, CliError> {
    init_threads()?;
    let config = match &cli.global.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    let g = &cli.global;
    match &cli.command {
        Command::VerifyTensor { fault_rhs_scale } => commands::tensor::run(&config, g, *fault_rhs_scale),
        Command::ScanFunctions => commands::functions::run(&config, g),
        Command::Simulate(args) => commands::simulate::run(&config, g, args),
        Command::Oracle { family, n } => commands::oracle::run(&config, g, family.as_deref(), *n),
        Command::Functionals(args) => commands::functionals::run(&config, g, args),
    }
}

/// Runs the parsed command and returns the process exit code.
pub fn main_with(cli: Cli) -> i32 {
    match execute(&cli) {
        Ok(outcome) => {
            for line in &outcome.lines {
                println!("{line}");
            }
            if outcome.passed {
                println!("{}: all checks passed", cli.command.name());
                0
            } else {
                println!("{}: verification failed", cli.command.name());
                1
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
