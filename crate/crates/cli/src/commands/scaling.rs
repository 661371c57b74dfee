//! The `scaling` subcommand: cost of the complete method across grid sizes.
//!
//! Each (size, coarse size) cell runs the preconditioner precompute and a
//! full eigenvalue solve, recording wall times, the precompute fraction and
//! iteration totals. Cells the desk-scale memory guard rejects — and coarse
//! sizes infeasible for a given fine size — are skipped with a note rather
//! than failing the sweep; numerical failures are noted, the completed rows
//! are still written, and the process exits with the numerical-failure code.

use std::time::Instant;

use wep_core::krylov::LinearOp;
use wep_core::resinv::{resinv, ResinvOptions};
use wep_core::smw::SmwError;
use wep_core::{
    with_workers, CoarseGrid, DiscreteProblem, SchurAction, SmwPreconditioner,
    DESK_SCALE_UNKNOWN_CAP,
};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{seeded_vector, ArtifactWriter};

use super::fmt_complex;

const HEADER: &str = "n_z,n_x,unknowns,coarse_nz,cells,build_seconds,solve_seconds,total_seconds,\
                      precompute_fraction,inner_iterations,outer_iterations,gamma_re,gamma_im,residual";

pub fn run(cfg: &RunConfig, sizes: &[usize], coarse_list: &[usize]) -> Result<(), CliError> {
    with_workers(cfg.workers, || scaling_inner(cfg, sizes, coarse_list))
}

fn scaling_inner(cfg: &RunConfig, sizes: &[usize], coarse_list: &[usize]) -> Result<(), CliError> {
    let writer = ArtifactWriter::new(&cfg.out_dir, cfg.seed)?;
    if sizes.is_empty() {
        let path = writer.csv("scaling.csv", HEADER, &[])?;
        println!("no sizes requested; empty report written to {}", path.display());
        return Ok(());
    }
    for &n_z in sizes {
        if n_z % 2 == 0 {
            return Err(CliError::Config(format!("size n_z = {n_z} must be odd")));
        }
    }
    let list: Vec<usize> = if coarse_list.is_empty() {
        vec![cfg.coarse_nz]
    } else {
        coarse_list.to_vec()
    };

    let mut rows = Vec::new();
    let mut notes = Vec::new();
    let mut failures = 0usize;
    for &n_z in sizes {
        let n_x = n_z + 4;
        let unknowns = n_x * n_z;
        if unknowns >= DESK_SCALE_UNKNOWN_CAP {
            notes.push(format!(
                "skipped n_z = {n_z}: {unknowns} unknowns is at or above the desk-scale cap of {DESK_SCALE_UNKNOWN_CAP}"
            ));
            continue;
        }
        let prob = DiscreteProblem::new(cfg.geometry.clone(), n_x, n_z, cfg.k_bar)?;
        let schur = SchurAction::new(&prob, cfg.sigma)?;

        for &coarse_nz in &list {
            if coarse_nz == 0 || coarse_nz > n_z {
                notes.push(format!(
                    "skipped (n_z = {n_z}, coarse_nz = {coarse_nz}): coarse grid denser than the fine one"
                ));
                continue;
            }
            let grid = match CoarseGrid::with_layout(cfg.layout, n_x, n_z, coarse_nz) {
                Ok(grid) => grid,
                Err(err) => {
                    notes.push(format!("skipped (n_z = {n_z}, coarse_nz = {coarse_nz}): {err}"));
                    continue;
                }
            };
            let cells = grid.len();

            let build_start = Instant::now();
            let smw = match SmwPreconditioner::build(&schur, grid) {
                Ok(smw) => smw,
                Err(err @ SmwError::CoarseSpaceTooLarge { .. }) => {
                    notes.push(format!(
                        "skipped (n_z = {n_z}, coarse_nz = {coarse_nz}): memory guard: {err}"
                    ));
                    continue;
                }
                Err(err) => {
                    notes.push(format!("FAILED (n_z = {n_z}, coarse_nz = {coarse_nz}): {err}"));
                    failures += 1;
                    continue;
                }
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
            let result = match resinv(&schur, Some(&smw as &dyn LinearOp), &opts) {
                Ok(result) => result,
                Err(err) => {
                    notes.push(format!("FAILED (n_z = {n_z}, coarse_nz = {coarse_nz}): {err}"));
                    failures += 1;
                    continue;
                }
            };
            let solve_seconds = solve_start.elapsed().as_secs_f64();
            let total = build_seconds + solve_seconds;
            let inner_total: usize = result.history.iter().map(|r| r.inner_iterations).sum();

            println!(
                "n_z {n_z:>5} coarse_nz {coarse_nz:>3}: build {build_seconds:>8.3} s, solve {solve_seconds:>8.3} s \
                 ({:.0}% precompute), {} outer / {} inner iterations, gamma = {}",
                100.0 * build_seconds / total,
                result.history.len(),
                inner_total,
                fmt_complex(result.gamma),
            );
            rows.push(format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                n_z,
                n_x,
                unknowns,
                coarse_nz,
                cells,
                build_seconds,
                solve_seconds,
                total,
                build_seconds / total,
                inner_total,
                result.history.len(),
                result.gamma.re,
                result.gamma.im,
                result.residual
            ));
        }
    }

    let path = writer.csv("scaling.csv", HEADER, &rows)?;
    for note in &notes {
        println!("{note}");
    }
    println!("{} row(s) written to {}", rows.len(), path.display());
    if failures > 0 {
        return Err(CliError::Numerical(format!(
            "{failures} scaling cell(s) failed numerically; completed rows were still written"
        )));
    }
    Ok(())
}
