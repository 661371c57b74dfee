//! Interior Schur complement of the block operator at the shift `sigma`.
//!
//! Eliminating the exterior traces from `M(sigma)` leaves
//! `S(sigma) = Q(sigma) - C_1 P(sigma)^{-1} C_2^T` on the `n_x n_z` interior
//! unknowns. In matrix-equation form,
//!
//! ```text
//! S(sigma) vec(X) = vec( A X + X B + Phi(X) ),
//! A      = D_zz + 2 sigma D_z + (sigma^2 + k_bar) I        (circulant),
//! B      = D_xx                                            (sine-diagonal),
//! Phi(X) = (K - k_bar) o X - P_-^{-1}(X u) e_1^T - P_+^{-1}(X u~) e_nx^T,
//! ```
//!
//! where `u = (d1 e_1 + d2 e_2)/h_x^2` and `u~` its mirror: the low-rank
//! corrections touch only the first and last grid columns, and the free
//! shift `k_bar` cancels between `A` and `Phi`, so the action is independent
//! of it. The Sylvester part `A X + X B` is exactly what
//! [`SylvesterKernel`] inverts, which is what makes the
//! Sylvester-plus-low-rank preconditioner possible.

use num_complex::Complex64;
use thiserror::Error;

use crate::dtn::{DtnCoefficients, DtnMaps, Side};
use crate::krylov::LinearOp;
use crate::matrix::CMatrix;
use crate::operator::{apply_q_stencil, ensure_p_invertible, OperatorError};
use crate::problem::DiscreteProblem;
use crate::spectral::{CirculantSpectrum, SineSpectrum, SpectralError, SylvesterKernel};

#[derive(Debug, Error)]
pub enum SchurError {
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
}

/// Matrix-free action of `S(sigma)` plus the reduction/back-substitution
/// maps between full unknowns and interior unknowns.
pub struct SchurAction<'a> {
    problem: &'a DiscreteProblem,
    sigma: Complex64,
    k_bar: f64,
    kernel: SylvesterKernel,
    maps: DtnMaps,
    coeffs: DtnCoefficients,
}

impl<'a> SchurAction<'a> {
    /// Builds the action at `sigma` using the problem's `k_bar`.
    pub fn new(problem: &'a DiscreteProblem, sigma: Complex64) -> Result<Self, SchurError> {
        Self::with_k_bar(problem, sigma, problem.k_bar())
    }

    /// Builds the action with an explicit Sylvester shift `k_bar`.
    pub fn with_k_bar(
        problem: &'a DiscreteProblem,
        sigma: Complex64,
        k_bar: f64,
    ) -> Result<Self, SchurError> {
        let coeffs = DtnCoefficients::new(
            sigma,
            problem.p(),
            problem.geometry().kappa_minus,
            problem.geometry().kappa_plus,
        );
        let maps = DtnMaps::new(problem, &coeffs);
        ensure_p_invertible(&maps)?;

        let kernel = SylvesterKernel::new(
            circulant_a_spectrum(problem, sigma, k_bar),
            SineSpectrum::new(problem.n_x(), problem.h_x()),
        )?;
        Ok(SchurAction {
            problem,
            sigma,
            k_bar,
            kernel,
            maps,
            coeffs,
        })
    }

    pub fn problem(&self) -> &DiscreteProblem {
        self.problem
    }

    pub fn sigma(&self) -> Complex64 {
        self.sigma
    }

    pub fn k_bar(&self) -> f64 {
        self.k_bar
    }

    /// The fast Sylvester solver for `A X + X B`.
    pub fn kernel(&self) -> &SylvesterKernel {
        &self.kernel
    }

    /// FFT-diagonal boundary maps at `sigma`.
    pub fn maps(&self) -> &DtnMaps {
        &self.maps
    }

    pub fn coefficients(&self) -> &DtnCoefficients {
        &self.coeffs
    }

    /// Weight with which grid column `l` feeds the left (`Side::Minus`) or
    /// right boundary vector: `X u` has entries
    /// `sum_l weight(side, l) X[:, l]`.
    pub fn boundary_weight(&self, side: Side, l: usize) -> f64 {
        let prob = self.problem;
        let hx2 = prob.h_x() * prob.h_x();
        let n_x = prob.n_x();
        match side {
            Side::Minus if l == 0 => prob.d1() / hx2,
            Side::Minus if l == 1 => prob.d2() / hx2,
            Side::Plus if l == n_x - 1 => prob.d1() / hx2,
            Side::Plus if l == n_x - 2 => prob.d2() / hx2,
            _ => 0.0,
        }
    }

    /// `X u` (minus side) or `X u~` (plus side): the n_z-vector entering the
    /// low-rank boundary correction.
    fn boundary_moment(&self, side: Side, x: &[Complex64]) -> Vec<Complex64> {
        let n_z = self.problem.n_z();
        let n_x = self.problem.n_x();
        let (la, lb) = match side {
            Side::Minus => (0, 1),
            Side::Plus => (n_x - 1, n_x - 2),
        };
        let wa = self.boundary_weight(side, la);
        let wb = self.boundary_weight(side, lb);
        let ca = &x[la * n_z..(la + 1) * n_z];
        let cb = &x[lb * n_z..(lb + 1) * n_z];
        ca.iter()
            .zip(cb)
            .map(|(&a, &b)| wa * a + wb * b)
            .collect()
    }

    /// `Phi(X) = (K - k_bar) o X - P_-^{-1}(X u) e_1^T - P_+^{-1}(X u~) e_nx^T`.
    pub fn apply_phi(&self, x: &CMatrix) -> CMatrix {
        let prob = self.problem;
        let (n_x, n_z) = (prob.n_x(), prob.n_z());
        assert_eq!(x.rows(), n_z);
        assert_eq!(x.cols(), n_x);
        let k_grid = prob.k();
        let mut out = CMatrix::from_fn(n_z, n_x, |k, l| {
            (k_grid.get(k, l) - self.k_bar) * x.get(k, l)
        });
        let mut t = self.boundary_moment(Side::Minus, x.as_slice());
        self.maps.apply_p_inverse(Side::Minus, &mut t);
        for (o, v) in out.col_mut(0).iter_mut().zip(&t) {
            *o -= v;
        }
        let mut t = self.boundary_moment(Side::Plus, x.as_slice());
        self.maps.apply_p_inverse(Side::Plus, &mut t);
        for (o, v) in out.col_mut(n_x - 1).iter_mut().zip(&t) {
            *o -= v;
        }
        out
    }

    /// `out = S(sigma) x` for an interior vector `x = vec(X)`.
    ///
    /// Uses the direct stencil for `Q(sigma)` (the `k_bar` terms cancel
    /// analytically, so they are never formed) plus two boundary FFT solves.
    pub fn apply(&self, x: &[Complex64], out: &mut [Complex64]) {
        let prob = self.problem;
        let (n_x, n_z) = (prob.n_x(), prob.n_z());
        assert_eq!(x.len(), prob.interior_len());
        assert_eq!(out.len(), prob.interior_len());

        apply_q_stencil(prob, self.sigma, x, out);

        let mut t = self.boundary_moment(Side::Minus, x);
        self.maps.apply_p_inverse(Side::Minus, &mut t);
        for (o, v) in out[..n_z].iter_mut().zip(&t) {
            *o -= v;
        }
        let mut t = self.boundary_moment(Side::Plus, x);
        self.maps.apply_p_inverse(Side::Plus, &mut t);
        for (o, v) in out[(n_x - 1) * n_z..].iter_mut().zip(&t) {
            *o -= v;
        }
    }

    /// Reduces a full right-hand side `r = [r_int; r_ext]` to the Schur
    /// system: returns `(r_int - C_1 P(sigma)^{-1} r_ext, r_ext)`.
    pub fn reduce_rhs(&self, r: &[Complex64]) -> (Vec<Complex64>, Vec<Complex64>) {
        let prob = self.problem;
        let (n_x, n_z) = (prob.n_x(), prob.n_z());
        let (r_int, g_minus, g_plus) = prob.split(r);
        let hx2 = 1.0 / (prob.h_x() * prob.h_x());

        let mut reduced = r_int.to_vec();
        let mut t = g_minus.to_vec();
        self.maps.apply_p_inverse(Side::Minus, &mut t);
        for (o, v) in reduced[..n_z].iter_mut().zip(&t) {
            *o -= hx2 * v;
        }
        let mut t = g_plus.to_vec();
        self.maps.apply_p_inverse(Side::Plus, &mut t);
        for (o, v) in reduced[(n_x - 1) * n_z..].iter_mut().zip(&t) {
            *o -= hx2 * v;
        }

        let mut r_ext = g_minus.to_vec();
        r_ext.extend_from_slice(g_plus);
        (reduced, r_ext)
    }

    /// Recovers the full solution from the interior solve:
    /// `v = [q; P(sigma)^{-1} (r_ext - C_2^T q)]`.
    pub fn back_substitute(&self, q: &[Complex64], r_ext: &[Complex64]) -> Vec<Complex64> {
        let prob = self.problem;
        let (n_x, n_z) = (prob.n_x(), prob.n_z());
        assert_eq!(q.len(), prob.interior_len());
        assert_eq!(r_ext.len(), 2 * n_z);
        let (d1, d2) = (prob.d1(), prob.d2());

        let mut v = Vec::with_capacity(prob.dim());
        v.extend_from_slice(q);

        let mut t: Vec<Complex64> = (0..n_z)
            .map(|k| r_ext[k] - d1 * q[k] - d2 * q[n_z + k])
            .collect();
        self.maps.apply_p_inverse(Side::Minus, &mut t);
        v.extend_from_slice(&t);

        let last = (n_x - 1) * n_z;
        let second_last = (n_x - 2) * n_z;
        let mut t: Vec<Complex64> = (0..n_z)
            .map(|k| r_ext[n_z + k] - d1 * q[last + k] - d2 * q[second_last + k])
            .collect();
        self.maps.apply_p_inverse(Side::Plus, &mut t);
        v.extend_from_slice(&t);
        v
    }
}

impl LinearOp for SchurAction<'_> {
    fn dim(&self) -> usize {
        self.problem.interior_len()
    }

    fn apply(&self, x: &[Complex64], out: &mut [Complex64]) {
        SchurAction::apply(self, x, out);
    }
}

/// First-column spectrum of `A = D_zz + 2 sigma D_z + (sigma^2 + k_bar) I`.
fn circulant_a_spectrum(
    problem: &DiscreteProblem,
    sigma: Complex64,
    k_bar: f64,
) -> CirculantSpectrum {
    let n_z = problem.n_z();
    let h_z = problem.h_z();
    let hz2 = 1.0 / (h_z * h_z);
    let mut col = vec![Complex64::default(); n_z];
    col[0] = Complex64::new(-2.0 * hz2 + k_bar, 0.0) + sigma * sigma;
    col[1] = Complex64::new(hz2, 0.0) + sigma / h_z;
    col[n_z - 1] += Complex64::new(hz2, 0.0) - sigma / h_z;
    CirculantSpectrum::new(&col)
}
