//! The `solve` subcommand: one residual-inverse-iteration run end to end.
//!
//! Artifacts: `convergence.csv` (one row per outer iteration),
//! `eigenpair.csv` (the eigenvalue followed by the unit-norm eigenvector,
//! written only when the run converged) and `summary.txt`. A configured
//! `[run] cache` path is used as a read-through store for the coupling
//! matrix; cache problems degrade to a rebuild and are reported in the
//! summary, never failed on.

use std::time::Instant;

use wep_core::cache::{self, CacheUse};
use wep_core::krylov::LinearOp;
use wep_core::resinv::{resinv, EigResult, ResinvError, ResinvOptions};
use wep_core::{with_workers, CoarseGrid, SmwPreconditioner};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{seeded_vector, ArtifactWriter};

use super::{fmt_complex, problem, schur_action};

pub fn run(cfg: &RunConfig) -> Result<(), CliError> {
    with_workers(cfg.workers, || solve_inner(cfg))
}

fn solve_inner(cfg: &RunConfig) -> Result<(), CliError> {
    let writer = ArtifactWriter::new(&cfg.out_dir, cfg.seed)?;
    let prob = problem(cfg)?;
    let schur = schur_action(cfg, &prob)?;
    let grid = CoarseGrid::with_layout(cfg.layout, cfg.n_x, cfg.n_z, cfg.coarse_nz)?;

    let build_start = Instant::now();
    let (smw, cache_use) = match &cfg.cache {
        Some(path) => cache::load_or_build(path, &schur, grid)?,
        None => (
            SmwPreconditioner::build(&schur, grid)?,
            CacheUse::default(),
        ),
    };
    let build_seconds = build_start.elapsed().as_secs_f64();

    let opts = ResinvOptions {
        outer_tol: cfg.outer_tol,
        max_outer: cfg.max_outer,
        inner: cfg.inner,
        solver: cfg.solver,
        restart: cfg.restart,
        max_inner: cfg.max_iters,
        initial: Some(seeded_vector(cfg.seed, prob.dim())),
        gamma0: cfg.gamma0,
        warm_start: cfg.warm_start,
        ..ResinvOptions::default()
    };

    let solve_start = Instant::now();
    let outcome = resinv(&schur, Some(&smw as &dyn LinearOp), &opts);
    let solve_seconds = solve_start.elapsed().as_secs_f64();

    let k_bar = prob.k_bar();
    match outcome {
        Ok(result) => {
            emit(cfg, &writer, &result, true, k_bar, build_seconds, solve_seconds, &cache_use)?;
            println!(
                "gamma = {}   (residual {:.3e}, {} outer iterations)",
                fmt_complex(result.gamma),
                result.residual,
                result.history.len()
            );
            println!("artifacts in {}", writer.dir().display());
            Ok(())
        }
        Err(ResinvError::NoConvergence {
            iterations,
            last_residual,
            partial,
        }) => {
            emit(cfg, &writer, &partial, false, k_bar, build_seconds, solve_seconds, &cache_use)?;
            Err(CliError::Numerical(format!(
                "no convergence after {iterations} outer iterations (residual {last_residual:.3e}); history written to {}",
                writer.dir().join("convergence.csv").display()
            )))
        }
        Err(err) => Err(err.into()),
    }
}

#[allow(clippy::too_many_arguments)]
fn emit(
    cfg: &RunConfig,
    writer: &ArtifactWriter,
    result: &EigResult,
    converged: bool,
    k_bar: f64,
    build_seconds: f64,
    solve_seconds: f64,
    cache_use: &CacheUse,
) -> Result<(), CliError> {
    let rows: Vec<String> = result
        .history
        .iter()
        .enumerate()
        .map(|(i, rec)| {
            format!(
                "{},{},{},{},{},{},{},{},{}",
                i + 1,
                rec.gamma.re,
                rec.gamma.im,
                rec.residual,
                rec.inner_iterations,
                rec.inner_tolerance,
                rec.newton_steps,
                rec.outer_seconds,
                rec.inner_seconds
            )
        })
        .collect();
    writer.csv(
        "convergence.csv",
        "iteration,gamma_re,gamma_im,residual,inner_iterations,inner_tolerance,newton_steps,outer_seconds,inner_seconds",
        &rows,
    )?;

    if converged {
        let mut rows = Vec::with_capacity(result.v.len() + 1);
        rows.push(format!("gamma,{},{}", result.gamma.re, result.gamma.im));
        for (j, z) in result.v.iter().enumerate() {
            rows.push(format!("v{j},{},{}", z.re, z.im));
        }
        writer.csv("eigenpair.csv", "component,re,im", &rows)?;
    }

    let cache_note = match (&cfg.cache, cache_use.loaded) {
        (None, _) => "not configured".to_string(),
        (Some(path), true) => format!("hit ({})", path.display()),
        (Some(path), false) => {
            let mut note = match &cache_use.load_note {
                Some(reason) => format!("unusable ({reason}); rebuilt and saved to {}", path.display()),
                None => format!("miss; built and saved to {}", path.display()),
            };
            if let Some(save_err) = &cache_use.save_note {
                note = format!("{note} (save failed: {save_err})");
            }
            note
        }
    };
    let inner_total: usize = result.history.iter().map(|r| r.inner_iterations).sum();
    let summary = format!(
        "solve summary\n\
         grid:             {} x {} interior ({} unknowns), k_bar = {}\n\
         coarse grid:      {}, coarse_nz = {}\n\
         shift sigma:      {}\n\
         inner solver:     {:?}, restart {}, budget {}\n\
         workers:          {}\n\
         converged:        {} (residual {:.3e}, target {:.1e})\n\
         gamma:            {}\n\
         outer iterations: {}\n\
         inner iterations: {} total\n\
         preconditioner:   {:.3} s (cache {})\n\
         iteration time:   {:.3} s\n",
        cfg.n_x,
        cfg.n_z,
        cfg.n_x * cfg.n_z,
        k_bar,
        cfg.layout,
        cfg.coarse_nz,
        fmt_complex(cfg.sigma),
        cfg.solver,
        cfg.restart,
        cfg.max_iters,
        cfg.workers,
        if converged { "yes" } else { "NO" },
        result.residual,
        cfg.outer_tol,
        fmt_complex(result.gamma),
        result.history.len(),
        inner_total,
        build_seconds,
        cache_note,
        solve_seconds,
    );
    writer.text("summary.txt", &summary)?;
    Ok(())
}
