//! Dirichlet-to-Neumann boundary maps.
//!
//! Truncating the infinite leads produces, on each artificial boundary, a
//! dense operator that is diagonal in the periodic Fourier basis. For mode
//! `k` (with `n_z = 2p + 1`, `k = -p..p`) and exterior wavenumber `kappa`,
//!
//! ```text
//! beta_k(gamma) = (gamma + 2 pi i k)^2 + kappa^2,
//! s_k(gamma)    = sign(Im beta) * i * sqrt(beta)       (principal root),
//! s_k'(gamma)   = sign(Im beta) * i * (gamma + 2 pi i k) / sqrt(beta),
//! ```
//!
//! with `sign(0) := +1`. The boundary blocks are `P(gamma) = R diag(s_k + d0)
//! R^{-1}` where `R` holds the Fourier modes on the z-grid and `R^H = n_z
//! R^{-1}`, so applying `P`, its inverse, or its derivative block costs one
//! FFT round trip each.

use num_complex::Complex64;
use std::f64::consts::TAU;

use crate::problem::DiscreteProblem;
use crate::transforms::Dft;

/// Which artificial boundary a quantity belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// Left lead, `x <= x_minus`.
    Minus,
    /// Right lead, `x >= x_plus`.
    Plus,
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Side::Minus => write!(f, "minus"),
            Side::Plus => write!(f, "plus"),
        }
    }
}

/// `|Im beta|` below this is flagged as branch-ambiguous (the square-root
/// sign convention is a tie-break there, not a failure).
pub const BRANCH_TOL: f64 = 1e-14;

/// DtN mode symbols `s_k` and `s_k'` for both sides at a fixed `gamma`.
#[derive(Debug, Clone)]
pub struct DtnCoefficients {
    gamma: Complex64,
    p: usize,
    s_minus: Vec<Complex64>,
    s_plus: Vec<Complex64>,
    s_prime_minus: Vec<Complex64>,
    s_prime_plus: Vec<Complex64>,
    branch_ambiguous: Vec<(Side, i64)>,
}

impl DtnCoefficients {
    pub fn new(gamma: Complex64, p: usize, kappa_minus: f64, kappa_plus: f64) -> Self {
        let n = 2 * p + 1;
        let mut out = DtnCoefficients {
            gamma,
            p,
            s_minus: Vec::with_capacity(n),
            s_plus: Vec::with_capacity(n),
            s_prime_minus: Vec::with_capacity(n),
            s_prime_plus: Vec::with_capacity(n),
            branch_ambiguous: Vec::new(),
        };
        for k in -(p as i64)..=(p as i64) {
            let mu = gamma + Complex64::new(0.0, TAU * k as f64);
            for (side, kappa) in [(Side::Minus, kappa_minus), (Side::Plus, kappa_plus)] {
                let beta = mu * mu + kappa * kappa;
                if beta.im.abs() < BRANCH_TOL {
                    out.branch_ambiguous.push((side, k));
                }
                let sign = if beta.im < 0.0 { -1.0 } else { 1.0 };
                let root = beta.sqrt();
                let s = sign * Complex64::i() * root;
                let s_prime = sign * Complex64::i() * mu / root;
                match side {
                    Side::Minus => {
                        out.s_minus.push(s);
                        out.s_prime_minus.push(s_prime);
                    }
                    Side::Plus => {
                        out.s_plus.push(s);
                        out.s_prime_plus.push(s_prime);
                    }
                }
            }
        }
        out
    }

    pub fn gamma(&self) -> Complex64 {
        self.gamma
    }

    pub fn p(&self) -> usize {
        self.p
    }

    fn index(&self, k: i64) -> usize {
        let p = self.p as i64;
        debug_assert!(-p <= k && k <= p, "mode {k} outside -{p}..{p}");
        (k + p) as usize
    }

    /// Mode symbol `s_k` on the given side.
    pub fn s(&self, side: Side, k: i64) -> Complex64 {
        let i = self.index(k);
        match side {
            Side::Minus => self.s_minus[i],
            Side::Plus => self.s_plus[i],
        }
    }

    /// Derivative symbol `s_k' = d s_k / d gamma`.
    pub fn s_prime(&self, side: Side, k: i64) -> Complex64 {
        let i = self.index(k);
        match side {
            Side::Minus => self.s_prime_minus[i],
            Side::Plus => self.s_prime_plus[i],
        }
    }

    /// `sum_k (|s_{+,k}| + |s_{-,k}|)`, the boundary contribution to the
    /// residual-norm denominator.
    pub fn sum_abs_s(&self) -> f64 {
        self.s_minus
            .iter()
            .chain(self.s_plus.iter())
            .map(|s| s.norm())
            .sum()
    }

    /// Modes whose `beta` landed within [`BRANCH_TOL`] of the branch cut.
    pub fn branch_ambiguous(&self) -> &[(Side, i64)] {
        &self.branch_ambiguous
    }
}

/// FFT-diagonal realisations of `P(gamma)`, `P(gamma)^{-1}` and the
/// derivative block `R diag(s_k') R^{-1}` on both sides.
#[derive(Debug, Clone)]
pub struct DtnMaps {
    n_z: usize,
    p: usize,
    dft: Dft,
    /// `s_k + d0` in FFT bin order (bin `b` holds mode `b` for `b <= p`,
    /// mode `b - n_z` above).
    lambda_minus: Vec<Complex64>,
    lambda_plus: Vec<Complex64>,
    /// `s_k'` in FFT bin order (no `d0` term).
    lambda_prime_minus: Vec<Complex64>,
    lambda_prime_plus: Vec<Complex64>,
}

impl DtnMaps {
    pub fn new(problem: &DiscreteProblem, coeffs: &DtnCoefficients) -> Self {
        assert_eq!(problem.p(), coeffs.p(), "mode count mismatch");
        let n_z = problem.n_z();
        let p = problem.p();
        let d0 = Complex64::new(problem.d0(), 0.0);
        let bin_mode = |b: usize| -> i64 {
            if b <= p {
                b as i64
            } else {
                b as i64 - n_z as i64
            }
        };
        let collect = |f: &dyn Fn(i64) -> Complex64| -> Vec<Complex64> {
            (0..n_z).map(|b| f(bin_mode(b))).collect()
        };
        DtnMaps {
            n_z,
            p,
            dft: Dft::new(n_z),
            lambda_minus: collect(&|k| coeffs.s(Side::Minus, k) + d0),
            lambda_plus: collect(&|k| coeffs.s(Side::Plus, k) + d0),
            lambda_prime_minus: collect(&|k| coeffs.s_prime(Side::Minus, k)),
            lambda_prime_plus: collect(&|k| coeffs.s_prime(Side::Plus, k)),
        }
    }

    pub fn n_z(&self) -> usize {
        self.n_z
    }

    fn lambda(&self, side: Side) -> &[Complex64] {
        match side {
            Side::Minus => &self.lambda_minus,
            Side::Plus => &self.lambda_plus,
        }
    }

    fn lambda_prime(&self, side: Side) -> &[Complex64] {
        match side {
            Side::Minus => &self.lambda_prime_minus,
            Side::Plus => &self.lambda_prime_plus,
        }
    }

    /// Eigenvalue `s_k + d0` of `P` for the signed mode `k` (bin lookup).
    pub fn p_eigenvalue(&self, side: Side, k: i64) -> Complex64 {
        let b = k.rem_euclid(self.n_z as i64) as usize;
        self.lambda(side)[b]
    }

    /// Smallest `|s_k + d0|` on the side, with its mode index: the margin
    /// that decides whether `P(gamma)` may be inverted.
    pub fn min_inverse_margin(&self, side: Side) -> (i64, f64) {
        let p = self.p as i64;
        let mut best = (0i64, f64::INFINITY);
        for (b, lam) in self.lambda(side).iter().enumerate() {
            let mode = if b as i64 <= p {
                b as i64
            } else {
                b as i64 - self.n_z as i64
            };
            let mag = lam.norm();
            if mag < best.1 {
                best = (mode, mag);
            }
        }
        best
    }

    fn diagonal_apply(&self, lambda: &[Complex64], x: &mut [Complex64], invert: bool) {
        assert_eq!(x.len(), self.n_z, "boundary trace has wrong length");
        let mut scratch = Vec::new();
        self.dft.forward(x, &mut scratch);
        let inv_n = 1.0 / self.n_z as f64;
        for (xi, lam) in x.iter_mut().zip(lambda) {
            if invert {
                *xi = *xi * inv_n / lam;
            } else {
                *xi = *xi * inv_n * lam;
            }
        }
        self.dft.inverse(x, &mut scratch);
    }

    /// `x <- P(gamma) x` on the chosen side.
    pub fn apply_p(&self, side: Side, x: &mut [Complex64]) {
        self.diagonal_apply(self.lambda(side), x, false);
    }

    /// `x <- P(gamma)^{-1} x`; callers must have checked
    /// [`Self::min_inverse_margin`] once per `gamma`.
    pub fn apply_p_inverse(&self, side: Side, x: &mut [Complex64]) {
        self.diagonal_apply(self.lambda(side), x, true);
    }

    /// `x <- R diag(s_k') R^{-1} x`, the boundary block of `M'(gamma)`.
    pub fn apply_p_prime(&self, side: Side, x: &mut [Complex64]) {
        self.diagonal_apply(self.lambda_prime(side), x, false);
    }
}
