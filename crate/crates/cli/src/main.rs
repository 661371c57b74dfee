//! `wep` — benchmark and solve harness for the waveguide eigenvalue solver.
//!
//! One TOML configuration fully determines a run; see the repository README
//! for the schema. Exit codes: 0 on success, 1 on numerical failure
//! (non-convergence, singular operators), 2 on configuration or IO errors.

mod cli;
mod commands;
mod config;
mod error;
mod output;

use clap::Parser;

use crate::cli::{CacheAction, Cli, Command};
use crate::error::CliError;

fn main() {
    let args = Cli::parse();
    if let Err(err) = dispatch(args) {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}

fn dispatch(args: Cli) -> Result<(), CliError> {
    match args.command {
        Command::Solve(run) => {
            let cfg = config::load(&run)?;
            commands::solve::run(&cfg)
        }
        Command::PrecondBench { run, coarse_nz } => {
            let cfg = config::load(&run)?;
            commands::precond::run(&cfg, &coarse_nz)
        }
        Command::Scaling {
            run,
            sizes,
            coarse_nz,
        } => {
            let cfg = config::load(&run)?;
            commands::scaling::run(&cfg, &sizes, &coarse_nz)
        }
        Command::Cache { action } => match action {
            CacheAction::Build { run, path } => {
                let cfg = config::load(&run)?;
                commands::cache::build(&cfg, path.as_deref())
            }
            CacheAction::Inspect { path } => commands::cache::inspect(&path),
        },
    }
}
