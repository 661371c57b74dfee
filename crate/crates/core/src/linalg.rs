//! Dense complex linear algebra for the small coarse-space coupling systems.
//!
//! The only dense system in the solver is the `N x N` Woodbury coupling
//! matrix (`N` = number of coarse cells, a few hundred at most), so a plain
//! LU factorization with partial pivoting is all that is needed.

use num_complex::Complex64;
use thiserror::Error;

use crate::matrix::CMatrix;

/// Relative pivot threshold: a pivot below `PIVOT_TOL * max|A|` marks the
/// matrix as numerically singular.
pub const PIVOT_TOL: f64 = 1e-14;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error(
        "matrix is numerically singular: pivot {pivot:.3e} below {threshold:.3e} at step {step}"
    )]
    Singular {
        step: usize,
        pivot: f64,
        threshold: f64,
    },
    #[error("matrix must be square, got {rows} x {cols}")]
    NotSquare { rows: usize, cols: usize },
}

/// LU factorization with partial pivoting, `P A = L U`.
#[derive(Debug, Clone)]
pub struct LuFactors {
    lu: CMatrix,
    /// Row swaps `(k, p)` in elimination order.
    swaps: Vec<(usize, usize)>,
}

impl LuFactors {
    pub fn new(mut a: CMatrix) -> Result<Self, LinalgError> {
        let n = a.rows();
        if a.cols() != n {
            return Err(LinalgError::NotSquare {
                rows: a.rows(),
                cols: a.cols(),
            });
        }
        let threshold = PIVOT_TOL * a.max_abs();
        let mut swaps = Vec::with_capacity(n);
        for k in 0..n {
            let mut p = k;
            let mut best = a.get(k, k).norm();
            for i in k + 1..n {
                let mag = a.get(i, k).norm();
                if mag > best {
                    best = mag;
                    p = i;
                }
            }
            if best <= threshold {
                return Err(LinalgError::Singular {
                    step: k,
                    pivot: best,
                    threshold,
                });
            }
            if p != k {
                swaps.push((k, p));
                for j in 0..n {
                    let tmp = a.get(k, j);
                    a.set(k, j, a.get(p, j));
                    a.set(p, j, tmp);
                }
            }
            let pivot = a.get(k, k);
            for i in k + 1..n {
                let factor = a.get(i, k) / pivot;
                a.set(i, k, factor);
                if factor.norm() == 0.0 {
                    continue;
                }
                for j in k + 1..n {
                    let v = a.get(i, j) - factor * a.get(k, j);
                    a.set(i, j, v);
                }
            }
        }
        Ok(LuFactors { lu: a, swaps })
    }

    pub fn dim(&self) -> usize {
        self.lu.rows()
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [Complex64]) {
        let n = self.dim();
        assert_eq!(b.len(), n);
        for &(k, p) in &self.swaps {
            b.swap(k, p);
        }
        // Forward substitution with unit lower triangle.
        for i in 1..n {
            let mut acc = b[i];
            for j in 0..i {
                acc -= self.lu.get(i, j) * b[j];
            }
            b[i] = acc;
        }
        // Back substitution.
        for i in (0..n).rev() {
            let mut acc = b[i];
            for j in i + 1..n {
                acc -= self.lu.get(i, j) * b[j];
            }
            b[i] = acc / self.lu.get(i, i);
        }
    }

    pub fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}
