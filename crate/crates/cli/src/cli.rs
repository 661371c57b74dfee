//! Command-line surface.
//!
//! One configuration file fully determines a run; flags either point at that
//! file, override individual keys (`--override section.key=value`), or adjust
//! the run environment (worker pool, output directory, random seed). Worker
//! precedence is `--workers`, then the `WEP_WORKERS` environment variable,
//! then the `[run] workers` config key.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "wep", version, about = "Waveguide eigenvalue solver benchmark harness")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run residual inverse iteration and write eigenpair artifacts.
    Solve(RunArgs),
    /// Benchmark the preconditioned inner solve against a reference solution.
    PrecondBench {
        #[command(flatten)]
        run: RunArgs,
        /// Coarse z-sizes to sweep (default: the configured one).
        #[arg(long, value_delimiter = ',')]
        coarse_nz: Vec<usize>,
    },
    /// Time preconditioner precompute and full solves across grid sizes.
    Scaling {
        #[command(flatten)]
        run: RunArgs,
        /// Fine z-sizes to run (odd; omit for an empty report).
        #[arg(long, value_delimiter = ',')]
        sizes: Vec<usize>,
        /// Coarse z-sizes per fine size (default: the configured one).
        #[arg(long, value_delimiter = ',')]
        coarse_nz: Vec<usize>,
    },
    /// Build or inspect an on-disk coupling-matrix cache.
    Cache {
        #[command(subcommand)]
        action: CacheAction,
    },
}

#[derive(Subcommand, Debug)]
pub enum CacheAction {
    /// Precompute the coupling matrix and write it to a cache file.
    Build {
        #[command(flatten)]
        run: RunArgs,
        /// Destination file (default: the `[run] cache` config key).
        #[arg(long)]
        path: Option<PathBuf>,
    },
    /// Print the header and checksum status of a cache file.
    Inspect {
        /// Cache file to describe.
        #[arg(long)]
        path: PathBuf,
    },
}

#[derive(Args, Debug)]
pub struct RunArgs {
    /// Run configuration (TOML).
    #[arg(long)]
    pub config: PathBuf,

    /// Override a configuration key, e.g. --override discretization.n_z=629.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,

    /// Worker threads for parallel sections (0 = library default).
    #[arg(long)]
    pub workers: Option<usize>,

    /// Output directory for artifacts.
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Seed for random right-hand sides and starting vectors.
    #[arg(long)]
    pub seed: Option<u64>,
}
