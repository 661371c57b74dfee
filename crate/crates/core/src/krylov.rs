//! Krylov solvers for the shifted interior systems.
//!
//! Both solvers are right-preconditioned: they iterate on `A M^{-1} u = b`
//! and return `x = M^{-1} u`, so the residual of the preconditioned problem
//! is the residual `b - A x` of the original one. For GMRES this makes the
//! Givens-rotation residual estimates true residual norms up to roundoff;
//! convergence is nevertheless confirmed with an explicitly computed
//! residual before a solve is reported as converged.
//!
//! The implementations are deliberately sequential and free of reductions
//! whose order depends on thread count, so repeated runs of the same solve
//! are bit-identical regardless of the worker configuration (any parallelism
//! lives inside the operator callbacks, which are per-column and therefore
//! deterministic as well).

use num_complex::Complex64;
use thiserror::Error;

use crate::matrix::{vec_axpy, vec_dot, vec_norm};

/// Matrix-free action of a square complex operator.
pub trait LinearOp {
    fn dim(&self) -> usize;
    /// `out = A x`; both slices have length `dim()`.
    fn apply(&self, x: &[Complex64], out: &mut [Complex64]);
}

impl<T: LinearOp + ?Sized> LinearOp for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn apply(&self, x: &[Complex64], out: &mut [Complex64]) {
        (**self).apply(x, out)
    }
}

/// Below this subdiagonal magnitude the Arnoldi recurrence has found an
/// invariant subspace ("lucky" breakdown when the residual is already at
/// tolerance, a hard error otherwise).
const LUCKY_BREAKDOWN_TOL: f64 = 1e-14;

/// Scale-relative tolerance for the BiCGStab inner products whose vanishing
/// makes the recurrence undefined.
const BICG_BREAKDOWN_TOL: f64 = 1e-14;

#[derive(Debug, Clone)]
pub struct GmresOptions {
    /// Relative residual target `||b - A x|| <= tol * ||b||`.
    pub tol: f64,
    /// Krylov basis size per restart cycle.
    pub restart: usize,
    /// Total iteration budget across all cycles.
    pub max_iters: usize,
}

impl Default for GmresOptions {
    fn default() -> Self {
        GmresOptions {
            tol: 1e-10,
            restart: 100,
            max_iters: 1000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BicgstabOptions {
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for BicgstabOptions {
    fn default() -> Self {
        BicgstabOptions {
            tol: 1e-10,
            max_iters: 1000,
        }
    }
}

/// Outcome of a linear solve, returned on success and carried by errors so
/// callers can inspect the best iterate even when the solve fell short.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub solution: Vec<Complex64>,
    pub iterations: usize,
    /// Relative residual per iteration; entry 0 is the initial residual
    /// (1.0 for the zero initial guess).
    pub residual_history: Vec<f64>,
    /// Explicitly computed relative residual of `solution`.
    pub final_residual: f64,
}

#[derive(Debug, Error)]
pub enum KrylovError {
    #[error(
        "no convergence after {} iterations (relative residual {:.3e})",
        report.iterations,
        report.final_residual
    )]
    MaxIterations { report: Box<SolveReport> },
    #[error(
        "{reason} breakdown at iteration {} (relative residual {:.3e})",
        report.iterations,
        report.final_residual
    )]
    Breakdown {
        reason: &'static str,
        report: Box<SolveReport>,
    },
    #[error("dimension mismatch: operator dimension {expected}, vector length {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
}

impl KrylovError {
    /// Best available iterate, if the solve progressed far enough to have one.
    pub fn report(&self) -> Option<&SolveReport> {
        match self {
            KrylovError::MaxIterations { report } | KrylovError::Breakdown { report, .. } => {
                Some(report)
            }
            KrylovError::DimensionMismatch { .. } => None,
        }
    }
}

fn check_dims(
    op: &dyn LinearOp,
    precond: Option<&dyn LinearOp>,
    b: &[Complex64],
) -> Result<usize, KrylovError> {
    let n = op.dim();
    if b.len() != n {
        return Err(KrylovError::DimensionMismatch {
            expected: n,
            actual: b.len(),
        });
    }
    if let Some(m) = precond {
        if m.dim() != n {
            return Err(KrylovError::DimensionMismatch {
                expected: n,
                actual: m.dim(),
            });
        }
    }
    Ok(n)
}

fn apply_precond(precond: Option<&dyn LinearOp>, x: &[Complex64], out: &mut [Complex64]) {
    match precond {
        Some(m) => m.apply(x, out),
        None => out.copy_from_slice(x),
    }
}

/// Relative true residual `||b - A x|| / bnorm`, with the residual written
/// into `scratch`.
fn true_residual(
    op: &dyn LinearOp,
    b: &[Complex64],
    x: &[Complex64],
    bnorm: f64,
    scratch: &mut [Complex64],
) -> f64 {
    op.apply(x, scratch);
    for (s, bi) in scratch.iter_mut().zip(b) {
        *s = bi - *s;
    }
    vec_norm(scratch) / bnorm
}

/// Complex Givens rotation `G = [[c, s], [-conj(s), c]]` (real `c`) with
/// `G [a; b]^T = [rho; 0]^T` for real nonnegative `b`.
fn make_givens(a: Complex64, b: f64) -> (f64, Complex64) {
    let an = a.norm();
    let rho = an.hypot(b);
    if rho == 0.0 {
        return (1.0, Complex64::default());
    }
    if an == 0.0 {
        return (0.0, Complex64::new(1.0, 0.0));
    }
    (an / rho, (a / an) * (b / rho))
}

/// Back-substitution for the rotated Hessenberg system of size `k`.
fn solve_upper(hcols: &[Vec<Complex64>], g: &[Complex64], k: usize) -> Vec<Complex64> {
    let mut y = vec![Complex64::default(); k];
    for i in (0..k).rev() {
        let mut acc = g[i];
        for col in i + 1..k {
            acc -= hcols[col][i] * y[col];
        }
        y[i] = acc / hcols[i][i];
    }
    y
}

/// `x + M^{-1} (V_k y)` for the current Arnoldi basis.
fn form_iterate(
    x: &[Complex64],
    basis: &[Vec<Complex64>],
    y: &[Complex64],
    precond: Option<&dyn LinearOp>,
) -> Vec<Complex64> {
    let n = x.len();
    let mut u = vec![Complex64::default(); n];
    for (vk, &yk) in basis.iter().zip(y) {
        vec_axpy(yk, vk, &mut u);
    }
    let mut z = vec![Complex64::default(); n];
    apply_precond(precond, &u, &mut z);
    for (zi, xi) in z.iter_mut().zip(x) {
        *zi += xi;
    }
    z
}

/// Restarted GMRES with right preconditioning and a zero initial guess.
pub fn gmres(
    op: &dyn LinearOp,
    precond: Option<&dyn LinearOp>,
    b: &[Complex64],
    opts: &GmresOptions,
) -> Result<SolveReport, KrylovError> {
    gmres_with_observer(op, precond, b, opts, None)
}

/// As [`gmres`], additionally reporting the candidate solution after every
/// iteration (1-based count) to `observer`. Forming the candidate costs one
/// preconditioner application and a basis combination per iteration, so the
/// observer is meant for diagnostics, not production solves.
pub fn gmres_with_observer(
    op: &dyn LinearOp,
    precond: Option<&dyn LinearOp>,
    b: &[Complex64],
    opts: &GmresOptions,
    mut observer: Option<&mut dyn FnMut(usize, &[Complex64])>,
) -> Result<SolveReport, KrylovError> {
    let n = check_dims(op, precond, b)?;
    let bnorm = vec_norm(b);
    if bnorm == 0.0 {
        return Ok(SolveReport {
            solution: vec![Complex64::default(); n],
            iterations: 0,
            residual_history: vec![0.0],
            final_residual: 0.0,
        });
    }
    let restart = opts.restart.max(1);
    let mut x = vec![Complex64::default(); n];
    let mut history = vec![1.0];
    let mut total = 0usize;
    let mut w = vec![Complex64::default(); n];
    let mut z = vec![Complex64::default(); n];

    loop {
        // (Re)start from the true residual of the current iterate.
        op.apply(&x, &mut w);
        let mut r: Vec<Complex64> = b.iter().zip(&w).map(|(bi, wi)| bi - wi).collect();
        let beta = vec_norm(&r);
        let rel = beta / bnorm;
        if rel <= opts.tol {
            return Ok(SolveReport {
                solution: x,
                iterations: total,
                residual_history: history,
                final_residual: rel,
            });
        }
        if total >= opts.max_iters {
            return Err(KrylovError::MaxIterations {
                report: Box::new(SolveReport {
                    solution: x,
                    iterations: total,
                    residual_history: history,
                    final_residual: rel,
                }),
            });
        }

        let inv_beta = 1.0 / beta;
        for ri in r.iter_mut() {
            *ri *= inv_beta;
        }
        let mut basis: Vec<Vec<Complex64>> = vec![r];
        let mut hcols: Vec<Vec<Complex64>> = Vec::new();
        let mut givens: Vec<(f64, Complex64)> = Vec::new();
        let mut g = vec![Complex64::default(); restart + 1];
        g[0] = Complex64::new(beta, 0.0);

        let mut cycle_len = 0;
        let mut estimate_converged = false;
        let mut invariant = false;

        for j in 0..restart {
            apply_precond(precond, &basis[j], &mut z);
            op.apply(&z, &mut w);
            let norm_before = vec_norm(&w);

            // Modified Gram-Schmidt with a single reorthogonalization pass
            // when cancellation ate more than half the vector.
            let mut h = vec![Complex64::default(); j + 2];
            for (i, vi) in basis.iter().enumerate() {
                let hij = vec_dot(vi, &w);
                h[i] = hij;
                vec_axpy(-hij, vi, &mut w);
            }
            if vec_norm(&w) < std::f64::consts::FRAC_1_SQRT_2 * norm_before {
                for (i, vi) in basis.iter().enumerate() {
                    let corr = vec_dot(vi, &w);
                    h[i] += corr;
                    vec_axpy(-corr, vi, &mut w);
                }
            }
            let h_next = vec_norm(&w);

            for (i, &(c, s)) in givens.iter().enumerate() {
                let (a, bb) = (h[i], h[i + 1]);
                h[i] = c * a + s * bb;
                h[i + 1] = -s.conj() * a + c * bb;
            }
            let (c, s) = make_givens(h[j], h_next);
            h[j] = c * h[j] + s * h_next;
            h[j + 1] = Complex64::default();
            givens.push((c, s));
            let gj = g[j];
            g[j] = c * gj;
            g[j + 1] = -s.conj() * gj;
            hcols.push(h);

            total += 1;
            cycle_len = j + 1;
            let estimate = g[j + 1].norm() / bnorm;
            history.push(estimate);

            if let Some(obs) = observer.as_deref_mut() {
                let y = solve_upper(&hcols, &g, cycle_len);
                let candidate = form_iterate(&x, &basis, &y, precond);
                obs(total, &candidate);
            }

            estimate_converged = estimate <= opts.tol;
            invariant = h_next < LUCKY_BREAKDOWN_TOL;
            if estimate_converged || invariant || total >= opts.max_iters || j + 1 == restart {
                break;
            }
            for wi in w.iter_mut() {
                *wi /= h_next;
            }
            basis.push(std::mem::replace(&mut w, vec![Complex64::default(); n]));
        }

        let y = solve_upper(&hcols, &g, cycle_len);
        x = form_iterate(&x, &basis, &y, precond);

        if estimate_converged || invariant {
            let true_rel = true_residual(op, b, &x, bnorm, &mut w);
            if true_rel <= opts.tol {
                return Ok(SolveReport {
                    solution: x,
                    iterations: total,
                    residual_history: history,
                    final_residual: true_rel,
                });
            }
            if invariant {
                // The Krylov space is exhausted; no further progress possible.
                return Err(KrylovError::Breakdown {
                    reason: "Arnoldi",
                    report: Box::new(SolveReport {
                        solution: x,
                        iterations: total,
                        residual_history: history,
                        final_residual: true_rel,
                    }),
                });
            }
            // Rotation estimate was optimistic; fall through to a restart.
        }
        if total >= opts.max_iters {
            let true_rel = true_residual(op, b, &x, bnorm, &mut w);
            return Err(KrylovError::MaxIterations {
                report: Box::new(SolveReport {
                    solution: x,
                    iterations: total,
                    residual_history: history,
                    final_residual: true_rel,
                }),
            });
        }
    }
}

/// Right-preconditioned BiCGStab with a zero initial guess.
///
/// The residual recurrence of BiCGStab drifts from the true residual, so the
/// history records explicitly computed residuals and the best iterate seen
/// so far is what failure reports carry.
pub fn bicgstab(
    op: &dyn LinearOp,
    precond: Option<&dyn LinearOp>,
    b: &[Complex64],
    opts: &BicgstabOptions,
) -> Result<SolveReport, KrylovError> {
    let n = check_dims(op, precond, b)?;
    let bnorm = vec_norm(b);
    if bnorm == 0.0 {
        return Ok(SolveReport {
            solution: vec![Complex64::default(); n],
            iterations: 0,
            residual_history: vec![0.0],
            final_residual: 0.0,
        });
    }

    let mut x = vec![Complex64::default(); n];
    let mut r = b.to_vec();
    let r_hat = r.clone();
    let mut p = vec![Complex64::default(); n];
    let mut v = vec![Complex64::default(); n];
    let mut p_hat = vec![Complex64::default(); n];
    let mut s_hat = vec![Complex64::default(); n];
    let mut t = vec![Complex64::default(); n];
    let mut scratch = vec![Complex64::default(); n];
    let mut rho_old = Complex64::new(1.0, 0.0);
    let mut alpha = Complex64::new(1.0, 0.0);
    let mut omega = Complex64::new(1.0, 0.0);

    let mut history = vec![1.0];
    let mut best = (1.0, x.clone());

    let fail = |reason: Option<&'static str>,
                iterations: usize,
                history: Vec<f64>,
                best: (f64, Vec<Complex64>)| {
        let report = Box::new(SolveReport {
            solution: best.1,
            iterations,
            residual_history: history,
            final_residual: best.0,
        });
        match reason {
            Some(reason) => KrylovError::Breakdown { reason, report },
            None => KrylovError::MaxIterations { report },
        }
    };

    for iter in 1..=opts.max_iters {
        let rho = vec_dot(&r_hat, &r);
        if rho.norm() < BICG_BREAKDOWN_TOL * vec_norm(&r_hat) * vec_norm(&r) {
            return Err(fail(Some("rho"), iter - 1, history, best));
        }
        if iter == 1 {
            p.copy_from_slice(&r);
        } else {
            let beta = (rho / rho_old) * (alpha / omega);
            for k in 0..n {
                p[k] = r[k] + beta * (p[k] - omega * v[k]);
            }
        }
        apply_precond(precond, &p, &mut p_hat);
        op.apply(&p_hat, &mut v);
        let denom = vec_dot(&r_hat, &v);
        if denom.norm() < BICG_BREAKDOWN_TOL * vec_norm(&r_hat) * vec_norm(&v) {
            return Err(fail(Some("alpha"), iter - 1, history, best));
        }
        alpha = rho / denom;

        // Half step: x += alpha p_hat, s = r - alpha v.
        vec_axpy(alpha, &p_hat, &mut x);
        let s: Vec<Complex64> = r.iter().zip(&v).map(|(ri, vi)| ri - alpha * vi).collect();
        if vec_norm(&s) / bnorm <= opts.tol {
            let true_rel = true_residual(op, b, &x, bnorm, &mut scratch);
            history.push(true_rel);
            if true_rel <= opts.tol {
                return Ok(SolveReport {
                    solution: x,
                    iterations: iter,
                    residual_history: history,
                    final_residual: true_rel,
                });
            }
            if true_rel < best.0 {
                best = (true_rel, x.clone());
            }
            r = s;
            rho_old = rho;
            continue;
        }

        apply_precond(precond, &s, &mut s_hat);
        op.apply(&s_hat, &mut t);
        let tt = vec_dot(&t, &t).re;
        if tt == 0.0 {
            return Err(fail(Some("omega"), iter - 1, history, best));
        }
        omega = vec_dot(&t, &s) / tt;
        if omega.norm() < BICG_BREAKDOWN_TOL {
            return Err(fail(Some("omega"), iter - 1, history, best));
        }
        vec_axpy(omega, &s_hat, &mut x);
        for k in 0..n {
            r[k] = s[k] - omega * t[k];
        }

        let true_rel = true_residual(op, b, &x, bnorm, &mut scratch);
        history.push(true_rel);
        if true_rel < best.0 {
            best = (true_rel, x.clone());
        }
        if true_rel <= opts.tol {
            return Ok(SolveReport {
                solution: x,
                iterations: iter,
                residual_history: history,
                final_residual: true_rel,
            });
        }
        rho_old = rho;
    }
    Err(fail(None, opts.max_iters, history, best))
}
