//! Matrix-free actions of the nonlinear operator family.
//!
//! The discrete eigenvalue problem is `M(gamma) v = 0` with the block form
//!
//! ```text
//! M(gamma) = [ Q(gamma)  C_1       ]      Q(gamma) = A_0 + gamma A_1 + gamma^2 A_2
//!            [ C_2^T     P(gamma)  ]
//! ```
//!
//! acting on `v = [vec(X); g_minus; g_plus]`. Nothing is assembled: the
//! interior block acts through the matrix-equation identity
//! `Q(gamma) vec(X) = vec((D_zz + 2 gamma D_z + gamma^2 I) X + X D_xx + K o X)`
//! (fused 5-point/periodic stencils), the off-diagonal blocks touch only the
//! first and last two grid columns, and `P(gamma)` is FFT-diagonal.

use num_complex::Complex64;
use thiserror::Error;

use crate::dtn::{DtnCoefficients, DtnMaps, Side};
use crate::problem::DiscreteProblem;

#[derive(Debug, Error)]
pub enum OperatorError {
    #[error("M'(gamma) requires Re(gamma) < 0, got gamma = {gamma}")]
    RightHalfPlane { gamma: Complex64 },
    #[error(
        "P(gamma) is numerically singular on side {side}: mode {mode} has |s_k + d0| = {magnitude:.3e}"
    )]
    SingularDtnMode {
        side: Side,
        mode: i64,
        magnitude: f64,
    },
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
}

/// Margin below which `P(gamma)` is treated as singular.
pub const DTN_SINGULAR_TOL: f64 = 1e-14;

/// Checks that both boundary blocks of `P(gamma)` may be inverted.
pub fn ensure_p_invertible(maps: &DtnMaps) -> Result<(), OperatorError> {
    for side in [Side::Minus, Side::Plus] {
        let (mode, magnitude) = maps.min_inverse_margin(side);
        if magnitude < DTN_SINGULAR_TOL {
            return Err(OperatorError::SingularDtnMode {
                side,
                mode,
                magnitude,
            });
        }
    }
    Ok(())
}

/// `M(gamma)` and `M'(gamma)` at a fixed `gamma`.
pub struct BlockOperator<'a> {
    problem: &'a DiscreteProblem,
    gamma: Complex64,
    coeffs: DtnCoefficients,
    maps: DtnMaps,
}

impl<'a> BlockOperator<'a> {
    pub fn new(problem: &'a DiscreteProblem, gamma: Complex64) -> Self {
        let coeffs = DtnCoefficients::new(
            gamma,
            problem.p(),
            problem.geometry().kappa_minus,
            problem.geometry().kappa_plus,
        );
        let maps = DtnMaps::new(problem, &coeffs);
        BlockOperator {
            problem,
            gamma,
            coeffs,
            maps,
        }
    }

    pub fn gamma(&self) -> Complex64 {
        self.gamma
    }

    pub fn problem(&self) -> &DiscreteProblem {
        self.problem
    }

    pub fn coefficients(&self) -> &DtnCoefficients {
        &self.coeffs
    }

    pub fn maps(&self) -> &DtnMaps {
        &self.maps
    }

    fn check_dim(&self, v: &[Complex64]) -> Result<(), OperatorError> {
        if v.len() != self.problem.dim() {
            return Err(OperatorError::DimensionMismatch {
                expected: self.problem.dim(),
                actual: v.len(),
            });
        }
        Ok(())
    }

    /// `M(gamma) v`.
    pub fn apply(&self, v: &[Complex64]) -> Result<Vec<Complex64>, OperatorError> {
        self.check_dim(v)?;
        let prob = self.problem;
        let (n_x, n_z) = (prob.n_x(), prob.n_z());
        let (x_int, g_minus, g_plus) = prob.split(v);
        let mut out = vec![Complex64::default(); prob.dim()];

        // Interior rows: Q(gamma) vec(X) + C_1 [g_-; g_+].
        apply_q_stencil(prob, self.gamma, x_int, &mut out[..prob.interior_len()]);
        let hx2 = 1.0 / (prob.h_x() * prob.h_x());
        for k in 0..n_z {
            out[k] += hx2 * g_minus[k];
            out[(n_x - 1) * n_z + k] += hx2 * g_plus[k];
        }

        // Exterior rows: C_2^T vec(X) + P(gamma) [g_-; g_+].
        let (d1, d2) = (prob.d1(), prob.d2());
        let ni = prob.interior_len();
        {
            let mut t = g_minus.to_vec();
            self.maps.apply_p(Side::Minus, &mut t);
            let (c0, c1) = (&x_int[..n_z], &x_int[n_z..2 * n_z]);
            for k in 0..n_z {
                out[ni + k] = d1 * c0[k] + d2 * c1[k] + t[k];
            }
        }
        {
            let mut t = g_plus.to_vec();
            self.maps.apply_p(Side::Plus, &mut t);
            let last = &x_int[(n_x - 1) * n_z..];
            let second_last = &x_int[(n_x - 2) * n_z..(n_x - 1) * n_z];
            for k in 0..n_z {
                out[ni + n_z + k] = d1 * last[k] + d2 * second_last[k] + t[k];
            }
        }
        Ok(out)
    }

    /// `M'(gamma) v = [(A_1 + 2 gamma A_2) vec(X); R diag(s') R^{-1} g]`.
    ///
    /// The derivative of the boundary symbol is only valid in the open left
    /// half-plane.
    pub fn apply_prime(&self, v: &[Complex64]) -> Result<Vec<Complex64>, OperatorError> {
        if self.gamma.re >= 0.0 {
            return Err(OperatorError::RightHalfPlane { gamma: self.gamma });
        }
        self.check_dim(v)?;
        let prob = self.problem;
        let (n_x, n_z) = (prob.n_x(), prob.n_z());
        let (x_int, g_minus, g_plus) = prob.split(v);
        let mut out = vec![Complex64::default(); prob.dim()];

        // Interior: 2 D_z X + 2 gamma X (periodic central difference in z).
        let inv_hz = 1.0 / prob.h_z();
        let two_gamma = 2.0 * self.gamma;
        for l in 0..n_x {
            let col = &x_int[l * n_z..(l + 1) * n_z];
            let out_col = &mut out[l * n_z..(l + 1) * n_z];
            for k in 0..n_z {
                let up = col[(k + n_z - 1) % n_z];
                let down = col[(k + 1) % n_z];
                out_col[k] = (up - down) * inv_hz + two_gamma * col[k];
            }
        }

        let ni = prob.interior_len();
        let mut t = g_minus.to_vec();
        self.maps.apply_p_prime(Side::Minus, &mut t);
        out[ni..ni + n_z].copy_from_slice(&t);
        let mut t = g_plus.to_vec();
        self.maps.apply_p_prime(Side::Plus, &mut t);
        out[ni + n_z..].copy_from_slice(&t);
        Ok(out)
    }

    /// Scale factor that turns `||M(gamma) v||_2` into a backward-error style
    /// residual: the summed 1-norms of every block of `M(gamma)`.
    pub fn residual_denominator(&self) -> f64 {
        let prob = self.problem;
        let g = self.gamma.norm();
        prob.norm_a0_1()
            + g * prob.norm_a1_1()
            + g * g * prob.norm_a2_1()
            + prob.norm_c1_1()
            + prob.norm_c2t_1()
            + 2.0 * prob.d0().abs()
            + self.coeffs.sum_abs_s()
    }

    /// Relative residual `||M(gamma) v||_2 / (denominator * ||v||_2)`.
    pub fn relative_residual(&self, v: &[Complex64]) -> Result<f64, OperatorError> {
        let mv = self.apply(v)?;
        let vnorm = crate::matrix::vec_norm(v);
        Ok(crate::matrix::vec_norm(&mv) / (self.residual_denominator() * vnorm.max(f64::MIN_POSITIVE)))
    }
}

/// Interior stencil action `Q(gamma) vec(X)`, written to `out` (length
/// `n_x * n_z`), using the matrix-equation form
/// `(D_zz + 2 gamma D_z + gamma^2 I) X + X D_xx + K o X`.
pub(crate) fn apply_q_stencil(
    prob: &DiscreteProblem,
    gamma: Complex64,
    x_int: &[Complex64],
    out: &mut [Complex64],
) {
    let (n_x, n_z) = (prob.n_x(), prob.n_z());
    debug_assert_eq!(x_int.len(), prob.interior_len());
    debug_assert_eq!(out.len(), prob.interior_len());
    let hz2 = 1.0 / (prob.h_z() * prob.h_z());
    let hx2 = 1.0 / (prob.h_x() * prob.h_x());
    // z-stencil weights: X_{k-1} (up), X_k, X_{k+1} (down), periodic in k.
    let w_up = hz2 + gamma / prob.h_z();
    let w_mid = -2.0 * hz2 + gamma * gamma;
    let w_down = hz2 - gamma / prob.h_z();
    let k_grid = prob.k();
    for l in 0..n_x {
        let col = &x_int[l * n_z..(l + 1) * n_z];
        let out_col = &mut out[l * n_z..(l + 1) * n_z];
        for k in 0..n_z {
            let up = col[(k + n_z - 1) % n_z];
            let down = col[(k + 1) % n_z];
            out_col[k] = w_up * up + (w_mid + k_grid.get(k, l) - 2.0 * hx2) * col[k] + w_down * down;
        }
        if l > 0 {
            let left = &x_int[(l - 1) * n_z..l * n_z];
            for k in 0..n_z {
                out_col[k] += hx2 * left[k];
            }
        }
        if l + 1 < n_x {
            let right = &x_int[(l + 1) * n_z..(l + 2) * n_z];
            for k in 0..n_z {
                out_col[k] += hx2 * right[k];
            }
        }
    }
}

/// Convenience wrapper: `M(gamma) v` without keeping the operator.
pub fn apply_m(
    problem: &DiscreteProblem,
    gamma: Complex64,
    v: &[Complex64],
) -> Result<Vec<Complex64>, OperatorError> {
    BlockOperator::new(problem, gamma).apply(v)
}

/// Convenience wrapper for the relative residual at `(gamma, v)`.
pub fn relative_residual_norm(
    problem: &DiscreteProblem,
    gamma: Complex64,
    v: &[Complex64],
) -> Result<f64, OperatorError> {
    BlockOperator::new(problem, gamma).relative_residual(v)
}
