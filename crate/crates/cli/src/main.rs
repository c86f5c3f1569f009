//! `svi`: run rigid-body and heavy-top experiments from a TOML file.
//!
//! Exit codes: 0 success, 1 configuration or I/O error, 2 solver failure,
//! 3 invariant violation.

mod commands;
mod config;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::Context;
use crate::config::{Overrides, RunConfig};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Solver(String),
    Invariant(String),
}

impl CliError {
    pub fn io(path: &Path, e: std::io::Error) -> CliError {
        CliError::Config(format!("{}: {e}", path.display()))
    }

    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Solver(_) => 2,
            CliError::Invariant(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Solver(m) => write!(f, "solver failure: {m}"),
            CliError::Invariant(m) => write!(f, "invariant violated: {m}"),
        }
    }
}

impl From<svi_core::Error> for CliError {
    fn from(e: svi_core::Error) -> CliError {
        use svi_core::Error::*;
        match e {
            Configuration(_) | InvalidArgument(_) | NotRotation { .. } | NotSkew { .. } => {
                CliError::Config(e.to_string())
            }
            _ => CliError::Solver(e.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(name = "svi", version, about = "Stochastic midpoint integrators on SO(3)")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one trajectory and write its CSV and JSON summary.
    Simulate(Args),
    /// Run the [ensemble] block: one CSV per member plus snapshots.
    Ensemble(Args),
    /// Run the [convergence] block and fit the strong order.
    Converge(Args),
    /// Run one trajectory and audit its conserved quantities.
    Check(Args),
}

#[derive(clap::Args)]
struct Args {
    #[arg(long)]
    config: PathBuf,
    /// Output directory, overriding `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed overriding `run.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for ensembles and convergence samples.
    #[arg(long)]
    workers: Option<usize>,
    /// Treat a violated contraction bound as an error.
    #[arg(long)]
    strict_guard: bool,
}

fn load(args: &Args) -> Result<Context, CliError> {
    let text = std::fs::read_to_string(&args.config).map_err(|e| CliError::io(&args.config, e))?;
    let mut config = RunConfig::parse(&text)?;
    config.apply(Overrides {
        seed: args.seed,
        strict_guard: args.strict_guard,
    });
    if args.workers == Some(0) {
        return Err(CliError::Config("--workers must be at least 1".into()));
    }
    Ok(Context {
        out: args.out.clone().unwrap_or_else(|| config.output.dir.clone()),
        config,
        workers: args.workers,
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let (args, run): (&Args, fn(&Context) -> Result<(), CliError>) = match &cli.command {
        Command::Simulate(a) => (a, commands::simulate),
        Command::Ensemble(a) => (a, commands::ensemble),
        Command::Converge(a) => (a, commands::converge),
        Command::Check(a) => (a, commands::check),
    };
    match load(args).and_then(|ctx| run(&ctx)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("svi: {e}");
            ExitCode::from(e.code())
        }
    }
}
