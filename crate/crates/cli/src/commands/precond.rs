//! The `precond-bench` subcommand: convergence of the preconditioned inner
//! solve `S(sigma) x = c` for a seeded random right-hand side.
//!
//! For each requested coarse size the system is first solved to a tight
//! reference tolerance, then re-solved at the configured tolerance while an
//! observer records the relative error of every intermediate iterate against
//! that reference. The sweep always runs GMRES (the residual history and
//! per-iteration iterates it exposes are the quantities under study); the
//! configured layout applies, so a uniform-grid comparison is one
//! `--override preconditioner.layout=uniform` away.

use wep_core::krylov::{gmres, gmres_with_observer, GmresOptions, LinearOp};
use wep_core::{with_workers, CoarseGrid, SmwPreconditioner};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{seeded_vector, ArtifactWriter};

use super::{problem, schur_action, vec_norm};

/// Tolerance of the reference solve the error curves are measured against.
const REFERENCE_TOL: f64 = 1e-13;

pub fn run(cfg: &RunConfig, coarse_list: &[usize]) -> Result<(), CliError> {
    with_workers(cfg.workers, || bench_inner(cfg, coarse_list))
}

fn bench_inner(cfg: &RunConfig, coarse_list: &[usize]) -> Result<(), CliError> {
    let writer = ArtifactWriter::new(&cfg.out_dir, cfg.seed)?;
    let prob = problem(cfg)?;
    let schur = schur_action(cfg, &prob)?;
    let rhs = seeded_vector(cfg.seed, prob.interior_len());

    let list: Vec<usize> = if coarse_list.is_empty() {
        vec![cfg.coarse_nz]
    } else {
        coarse_list.to_vec()
    };

    let mut rows = Vec::new();
    let mut lines = Vec::new();
    for &coarse_nz in &list {
        if coarse_nz == 0 || coarse_nz > cfg.n_z {
            return Err(CliError::Config(format!(
                "coarse_nz = {coarse_nz} must be in 1..={} (the fine z-size)",
                cfg.n_z
            )));
        }
        let grid = CoarseGrid::with_layout(cfg.layout, cfg.n_x, cfg.n_z, coarse_nz)?;
        let smw = SmwPreconditioner::build(&schur, grid)?;
        let precond = Some(&smw as &dyn LinearOp);

        let reference = gmres(
            &schur,
            precond,
            &rhs,
            &GmresOptions {
                tol: REFERENCE_TOL,
                restart: cfg.restart,
                max_iters: 4 * cfg.max_iters,
            },
        )
        .map_err(|err| {
            CliError::Numerical(format!(
                "reference solve at tolerance {REFERENCE_TOL:.0e} failed for coarse_nz = {coarse_nz}: {err}"
            ))
        })?;
        let ref_norm = vec_norm(&reference.solution).max(f64::MIN_POSITIVE);

        let mut rel_errors = Vec::new();
        let mut observer = |_: usize, candidate: &[num_complex::Complex64]| {
            let diff: f64 = candidate
                .iter()
                .zip(&reference.solution)
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>()
                .sqrt();
            rel_errors.push(diff / ref_norm);
        };
        let report = gmres_with_observer(
            &schur,
            precond,
            &rhs,
            &GmresOptions {
                tol: cfg.tol,
                restart: cfg.restart,
                max_iters: cfg.max_iters,
            },
            Some(&mut observer),
        )
        .map_err(|err| {
            CliError::Numerical(format!(
                "inner solve failed for coarse_nz = {coarse_nz}: {err}"
            ))
        })?;

        for i in 1..=report.iterations {
            let rel = rel_errors.get(i - 1).copied().unwrap_or(f64::NAN);
            rows.push(format!(
                "{},{},{},{},{}",
                cfg.layout,
                coarse_nz,
                i,
                report.residual_history[i],
                rel
            ));
        }
        lines.push(format!(
            "coarse_nz {coarse_nz:>4}: {:>4} iterations to {:.1e} (final relative error {:.3e})",
            report.iterations,
            cfg.tol,
            rel_errors.last().copied().unwrap_or(f64::NAN)
        ));
    }

    let path = writer.csv(
        "precond_bench.csv",
        "layout,coarse_nz,iteration,residual,rel_error",
        &rows,
    )?;
    println!(
        "inner-solve benchmark on the {} x {} interior, layout {}",
        cfg.n_x, cfg.n_z, cfg.layout
    );
    for line in lines {
        println!("{line}");
    }
    println!("rows written to {}", path.display());
    Ok(())
}
