//! The `cache` subcommand: build and inspect coupling-matrix caches.
//!
//! `build` runs the preconditioner precompute for the configured problem and
//! writes the coupling matrix, keyed by everything that determines it, to a
//! file that later solves use as a read-through cache. `inspect` prints the
//! header of such a file after verifying its checksum.

use std::path::{Path, PathBuf};
use std::time::Instant;

use wep_core::{cache, with_workers, CoarseGrid, SmwPreconditioner};

use crate::config::RunConfig;
use crate::error::CliError;

use super::{fmt_complex, problem, schur_action};

pub fn build(cfg: &RunConfig, path: Option<&Path>) -> Result<(), CliError> {
    let path: PathBuf = match path {
        Some(p) => p.to_path_buf(),
        None => cfg.cache.clone().ok_or_else(|| {
            CliError::Config(
                "no cache destination: pass --path or set the [run] cache config key".into(),
            )
        })?,
    };
    with_workers(cfg.workers, || {
        let prob = problem(cfg)?;
        let schur = schur_action(cfg, &prob)?;
        let grid = CoarseGrid::with_layout(cfg.layout, cfg.n_x, cfg.n_z, cfg.coarse_nz)?;
        let replacing = path.exists();

        let start = Instant::now();
        let smw = SmwPreconditioner::build(&schur, grid)?;
        let seconds = start.elapsed().as_secs_f64();

        let key = cache::CacheKey::for_preconditioner(&schur, smw.grid());
        cache::save(&path, &key, smw.coupling())
            .map_err(|err| CliError::Config(format!("cannot write {}: {err}", path.display())))?;
        println!(
            "{} {}: {} x {} coarse cells for the {} x {} interior, sigma = {}, k_bar = {} ({seconds:.3} s)",
            if replacing { "replaced" } else { "wrote" },
            path.display(),
            key.coarse_nx,
            key.coarse_nz,
            key.n_x,
            key.n_z,
            fmt_complex(key.sigma),
            key.k_bar,
        );
        Ok(())
    })
}

pub fn inspect(path: &Path) -> Result<(), CliError> {
    let (key, coupling) = cache::read(path).map_err(|err| {
        CliError::Config(format!("cannot inspect {}: {err}", path.display()))
    })?;
    println!("coupling cache {}", path.display());
    println!("  layout:        {}", key.layout);
    println!("  interior grid: {} x {}", key.n_x, key.n_z);
    println!(
        "  coarse cells:  {} x {} (N = {})",
        key.coarse_nx,
        key.coarse_nz,
        key.coarse_len()
    );
    println!("  sigma:         {}", fmt_complex(key.sigma));
    println!("  k_bar:         {}", key.k_bar);
    println!("  geometry hash: {:#018x}", key.geometry_hash);
    println!(
        "  payload:       {} x {} complex entries, checksum ok",
        coupling.rows(),
        coupling.cols()
    );
    Ok(())
}
