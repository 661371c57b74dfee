//! Finite-difference discretisation of the waveguide strip.
//!
//! The strip `[x_minus, x_plus] x [0, 1]` is sampled on an interior grid of
//! `n_x` Dirichlet columns and `n_z` periodic rows:
//!
//! * `h_x = (x_plus - x_minus) / (n_x + 1)`, nodes `x_l = x_minus + l h_x`
//!   for `l = 1..n_x` (the artificial boundaries `x_0, x_{n_x+1}` carry the
//!   exterior coupling);
//! * `h_z = 1 / n_z`, nodes `z_k = k h_z` for `k = 1..n_z`, with `n_z = 2p+1`
//!   odd so the Fourier modes `-p..p` are unambiguous.
//!
//! A field on the grid is an `n_z x n_x` matrix `X` with `X[k-1, l-1]` the
//! value at `(x_l, z_k)`; `vec(X)` stacks columns (see [`crate::matrix`]).
//! The full unknown of the eigenvalue problem appends two exterior traces of
//! length `n_z` each: `v = [vec(X); g_minus; g_plus]`.

use thiserror::Error;

use crate::geometry::{GeometryError, WaveguideGeometry};
use crate::matrix::Matrix;

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("n_z = {n_z} must be odd (n_z = 2p + 1) so the Fourier mode set -p..p is symmetric")]
    OddGridRequired { n_z: usize },
    #[error("grid {n_x} x {n_z} is too small; need n_x >= 3 and n_z >= 3")]
    GridTooSmall { n_x: usize, n_z: usize },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// How the free Sylvester shift `k_bar` is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KBarMode {
    /// Mean of the sampled `kappa^2` grid (the default).
    MeanK,
    /// Explicit value.
    Value(f64),
}

/// Samples `kappa^2` on the interior grid: entry `(k, l)` (0-based) holds
/// `kappa^2(x_{l+1}, z_{k+1})`.
pub fn sample_wavenumber(
    geometry: &WaveguideGeometry,
    n_x: usize,
    n_z: usize,
) -> Result<Matrix<f64>, ProblemError> {
    geometry.validate()?;
    check_grid(n_x, n_z)?;
    let h_x = (geometry.x_plus - geometry.x_minus) / (n_x as f64 + 1.0);
    let h_z = 1.0 / n_z as f64;
    Ok(Matrix::from_fn(n_z, n_x, |k, l| {
        let x = geometry.x_minus + (l as f64 + 1.0) * h_x;
        let z = (k as f64 + 1.0) * h_z;
        geometry.kappa_sq_at(x, z)
    }))
}

fn check_grid(n_x: usize, n_z: usize) -> Result<(), ProblemError> {
    if n_z % 2 == 0 {
        return Err(ProblemError::OddGridRequired { n_z });
    }
    if n_x < 3 || n_z < 3 {
        return Err(ProblemError::GridTooSmall { n_x, n_z });
    }
    Ok(())
}

/// Conventional x-resolution for a given z-resolution.
pub fn default_nx(n_z: usize) -> usize {
    n_z + 4
}

/// A validated geometry plus its sampled grid and every derived scalar the
/// operators need (spacings, one-sided difference weights, stencil 1-norms).
#[derive(Debug, Clone)]
pub struct DiscreteProblem {
    geometry: WaveguideGeometry,
    n_x: usize,
    n_z: usize,
    p: usize,
    h_x: f64,
    h_z: f64,
    k: Matrix<f64>,
    k_bar: f64,
    /// One-sided second-order difference weights at the artificial
    /// boundaries: `d0 = -3/(2 h_x)`, `d1 = 2/h_x`, `d2 = -1/(2 h_x)`.
    d0: f64,
    d1: f64,
    d2: f64,
    norm_a0: f64,
    norm_c2t: f64,
}

impl DiscreteProblem {
    pub fn new(
        geometry: WaveguideGeometry,
        n_x: usize,
        n_z: usize,
        k_bar_mode: KBarMode,
    ) -> Result<Self, ProblemError> {
        let k = sample_wavenumber(&geometry, n_x, n_z)?;
        let h_x = (geometry.x_plus - geometry.x_minus) / (n_x as f64 + 1.0);
        let h_z = 1.0 / n_z as f64;
        let k_bar = match k_bar_mode {
            KBarMode::MeanK => k.as_slice().iter().sum::<f64>() / k.len() as f64,
            KBarMode::Value(v) => v,
        };
        let d0 = -3.0 / (2.0 * h_x);
        let d1 = 2.0 / h_x;
        let d2 = -1.0 / (2.0 * h_x);

        // ||A_0||_1: max over grid columns of the absolute column sum of
        // D_xx^T (x) I + I (x) D_zz + diag(vec K). The z-stencil contributes
        // 2/h_z^2 off the diagonal (periodic neighbours), the x-stencil
        // 1/h_x^2 per interior neighbour, and the diagonal entries combine.
        let mut norm_a0: f64 = 0.0;
        for l in 0..n_x {
            let x_neighbors = if l == 0 || l == n_x - 1 { 1.0 } else { 2.0 };
            for row in 0..n_z {
                let diag = -2.0 / (h_z * h_z) - 2.0 / (h_x * h_x) + k.get(row, l);
                let colsum =
                    2.0 / (h_z * h_z) + x_neighbors / (h_x * h_x) + diag.abs();
                norm_a0 = norm_a0.max(colsum);
            }
        }

        // ||C_2^T||_1: each grid column of C_2^T holds at most the one-sided
        // weights d1 (columns 1 and n_x) and d2 (columns 2 and n_x - 1).
        let mut c2t_colsums = vec![0.0f64; n_x];
        c2t_colsums[0] += d1.abs();
        c2t_colsums[1] += d2.abs();
        c2t_colsums[n_x - 1] += d1.abs();
        c2t_colsums[n_x - 2] += d2.abs();
        let norm_c2t = c2t_colsums.iter().fold(0.0f64, |m, &v| m.max(v));

        Ok(DiscreteProblem {
            geometry,
            n_x,
            n_z,
            p: (n_z - 1) / 2,
            h_x,
            h_z,
            k,
            k_bar,
            d0,
            d1,
            d2,
            norm_a0,
            norm_c2t,
        })
    }

    pub fn geometry(&self) -> &WaveguideGeometry {
        &self.geometry
    }

    pub fn n_x(&self) -> usize {
        self.n_x
    }

    pub fn n_z(&self) -> usize {
        self.n_z
    }

    /// Half mode count: `n_z = 2p + 1`.
    pub fn p(&self) -> usize {
        self.p
    }

    pub fn h_x(&self) -> f64 {
        self.h_x
    }

    pub fn h_z(&self) -> f64 {
        self.h_z
    }

    /// Sampled `kappa^2`, an `n_z x n_x` real matrix.
    pub fn k(&self) -> &Matrix<f64> {
        &self.k
    }

    pub fn k_bar(&self) -> f64 {
        self.k_bar
    }

    pub fn d0(&self) -> f64 {
        self.d0
    }

    pub fn d1(&self) -> f64 {
        self.d1
    }

    pub fn d2(&self) -> f64 {
        self.d2
    }

    /// Interior x-coordinate of grid column `l` (0-based).
    pub fn x_node(&self, l: usize) -> f64 {
        self.geometry.x_minus + (l as f64 + 1.0) * self.h_x
    }

    /// Interior z-coordinate of grid row `k` (0-based).
    pub fn z_node(&self, k: usize) -> f64 {
        (k as f64 + 1.0) * self.h_z
    }

    /// Number of interior unknowns, `n_x * n_z`.
    pub fn interior_len(&self) -> usize {
        self.n_x * self.n_z
    }

    /// Total unknowns including the two exterior traces, `n_x n_z + 2 n_z`.
    pub fn dim(&self) -> usize {
        self.interior_len() + 2 * self.n_z
    }

    /// Precomputed `||A_0||_1` (includes the sampled `kappa^2` diagonal).
    pub fn norm_a0_1(&self) -> f64 {
        self.norm_a0
    }

    /// `||A_1||_1 = ||2 I (x) D_z||_1 = 2 / h_z`.
    pub fn norm_a1_1(&self) -> f64 {
        2.0 / self.h_z
    }

    /// `||A_2||_1 = ||I||_1 = 1`.
    pub fn norm_a2_1(&self) -> f64 {
        1.0
    }

    /// `||C_1||_1`: one entry `1/h_x^2` per column.
    pub fn norm_c1_1(&self) -> f64 {
        1.0 / (self.h_x * self.h_x)
    }

    /// `||C_2^T||_1` from the one-sided boundary weights.
    pub fn norm_c2t_1(&self) -> f64 {
        self.norm_c2t
    }

    /// Splits a full unknown into interior / exterior-minus / exterior-plus.
    pub fn split<'v, T>(&self, v: &'v [T]) -> (&'v [T], &'v [T], &'v [T]) {
        assert_eq!(v.len(), self.dim(), "vector length != problem dimension");
        let ni = self.interior_len();
        let nz = self.n_z;
        (&v[..ni], &v[ni..ni + nz], &v[ni + nz..])
    }

    /// Mutable variant of [`Self::split`].
    pub fn split_mut<'v, T>(
        &self,
        v: &'v mut [T],
    ) -> (&'v mut [T], &'v mut [T], &'v mut [T]) {
        assert_eq!(v.len(), self.dim(), "vector length != problem dimension");
        let ni = self.interior_len();
        let nz = self.n_z;
        let (int, ext) = v.split_at_mut(ni);
        let (minus, plus) = ext.split_at_mut(nz);
        (int, minus, plus)
    }
}
