//! Column-major matrix storage and small complex-vector helpers.
//!
//! Every grid unknown in this crate lives in a `Matrix` with column-major
//! layout: the field value at (z-index `k`, x-index `l`) sits at
//! `data[k + l * rows]`.  Stacking the columns of an `n_z x n_x` matrix is
//! exactly the `vec(.)` convention used throughout the solver, so a `Matrix`
//! doubles as its own vectorisation — `as_slice` *is* `vec(X)`.

use num_complex::Complex64;

/// Dense column-major matrix over a copyable scalar (`Complex64` or `f64`).
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

/// Complex matrix used for fields, right-hand sides and coupling blocks.
pub type CMatrix = Matrix<Complex64>;

impl<T: Copy + Default> Matrix<T> {
    /// Matrix of `rows x cols` default-initialised entries (zeros for numbers).
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![T::default(); rows * cols],
        }
    }

    /// Builds a matrix entrywise from `f(row, col)`.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for l in 0..cols {
            for k in 0..rows {
                data.push(f(k, l));
            }
        }
        Matrix { rows, cols, data }
    }

    /// Wraps an existing column-major buffer; `data.len()` must equal `rows * cols`.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Self {
        assert_eq!(
            data.len(),
            rows * cols,
            "column-major buffer has wrong length"
        );
        Matrix { rows, cols, data }
    }
}

impl<T: Copy> Matrix<T> {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Total number of entries (`rows * cols`).
    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> T {
        debug_assert!(row < self.rows && col < self.cols);
        self.data[row + col * self.rows]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: T) {
        debug_assert!(row < self.rows && col < self.cols);
        self.data[row + col * self.rows] = value;
    }

    /// Contiguous view of column `col`.
    #[inline]
    pub fn col(&self, col: usize) -> &[T] {
        &self.data[col * self.rows..(col + 1) * self.rows]
    }

    #[inline]
    pub fn col_mut(&mut self, col: usize) -> &mut [T] {
        &mut self.data[col * self.rows..(col + 1) * self.rows]
    }

    /// The column-major buffer, i.e. `vec(X)`.
    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }
}

impl CMatrix {
    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        vec_norm(&self.data)
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, z| m.max(z.norm()))
    }
}

/// Euclidean norm of a complex vector.
pub fn vec_norm(x: &[Complex64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Inner product `x^H y` (conjugate-linear in the first argument).
pub fn vec_dot(x: &[Complex64], y: &[Complex64]) -> Complex64 {
    debug_assert_eq!(x.len(), y.len());
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

/// `y += alpha * x`.
pub fn vec_axpy(alpha: Complex64, x: &[Complex64], y: &mut [Complex64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Scales `x` in place.
pub fn vec_scale(alpha: Complex64, x: &mut [Complex64]) {
    for xi in x {
        *xi *= alpha;
    }
}

/// Pairwise (cascade) summation of a complex slice.
///
/// Used wherever a sum feeds a reproducibility contract: the result depends
/// only on the slice contents, never on chunking or worker count, and the
/// rounding error grows like `O(log n)` instead of `O(n)`.
pub fn pairwise_sum(x: &[Complex64]) -> Complex64 {
    const BASE: usize = 32;
    if x.len() <= BASE {
        let mut acc = Complex64::new(0.0, 0.0);
        for z in x {
            acc += z;
        }
        acc
    } else {
        let mid = x.len() / 2;
        pairwise_sum(&x[..mid]) + pairwise_sum(&x[mid..])
    }
}
