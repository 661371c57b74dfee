//! Fast-diagonalization spectral kernels.
//!
//! Two structured eigendecompositions drive the whole solver:
//!
//! * circulant matrices (periodic z-stencils) are diagonalised by the DFT —
//!   the eigenvalues are the forward DFT of the first column, the
//!   eigenvectors the Fourier modes in FFT bin order;
//! * the Dirichlet second-difference matrix `D_xx = tridiag(1, -2, 1)/h^2`
//!   is diagonalised by the type-I sine basis `[sin(j q pi/(n+1))]` with
//!   analytic eigenvalues `-(4/h^2) sin^2(q pi / (2(n+1)))`.
//!
//! [`SylvesterKernel`] combines the two to solve `A X + X B = C` in
//! `O(n_x n_z log(n_x n_z))` time: transform to the joint eigenbasis, divide
//! by `lambda_A[p] + lambda_B[q]`, transform back.

use num_complex::Complex64;
use thiserror::Error;

use crate::matrix::CMatrix;
use crate::par;
use crate::transforms::{Dft, DstI, DstWork};

/// Absolute separation below which two eigenvalue sums count as a collision.
pub const COLLISION_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error(
        "Sylvester spectra collide: |lambda_A[{p}] + lambda_B[{q}]| = {separation:.3e} < {COLLISION_TOL:.0e}; the operator is numerically singular for this shift"
    )]
    SpectrumCollision {
        p: usize,
        q: usize,
        separation: f64,
    },
}

/// Eigenvalues of a circulant matrix, stored in FFT bin order together with
/// the transform that diagonalises it.
#[derive(Debug, Clone)]
pub struct CirculantSpectrum {
    dft: Dft,
    eigenvalues: Vec<Complex64>,
}

impl CirculantSpectrum {
    /// Spectrum of the circulant whose first column is `first_column`.
    pub fn new(first_column: &[Complex64]) -> Self {
        let dft = Dft::new(first_column.len());
        let mut eigenvalues = first_column.to_vec();
        let mut scratch = Vec::new();
        dft.forward(&mut eigenvalues, &mut scratch);
        CirculantSpectrum { dft, eigenvalues }
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Eigenvalues in FFT bin order: bin `m` belongs to the mode `e^{2 pi i j m / n}`.
    pub fn eigenvalues(&self) -> &[Complex64] {
        &self.eigenvalues
    }

    pub(crate) fn dft(&self) -> &Dft {
        &self.dft
    }

    /// Multiplies the represented circulant onto `x` in place
    /// (`x <- IDFT(diag(eig) DFT(x)) / n`).
    pub fn apply(&self, x: &mut [Complex64]) {
        let n = self.len();
        debug_assert_eq!(x.len(), n);
        let mut scratch = Vec::new();
        self.dft.forward(x, &mut scratch);
        let inv_n = 1.0 / n as f64;
        for (xi, lam) in x.iter_mut().zip(&self.eigenvalues) {
            *xi *= lam * inv_n;
        }
        self.dft.inverse(x, &mut scratch);
    }
}

/// Analytic spectrum of the Dirichlet second-difference matrix on `n` interior
/// points with spacing `h`, plus the sine transform that diagonalises it.
#[derive(Debug, Clone)]
pub struct SineSpectrum {
    dst: DstI,
    h: f64,
    eigenvalues: Vec<f64>,
}

impl SineSpectrum {
    pub fn new(n: usize, h: f64) -> Self {
        assert!(n >= 1 && h > 0.0);
        let denom = 2.0 * (n as f64 + 1.0);
        let eigenvalues = (1..=n)
            .map(|j| {
                let s = (j as f64 * std::f64::consts::PI / denom).sin();
                -4.0 / (h * h) * s * s
            })
            .collect();
        SineSpectrum {
            dst: DstI::new(n),
            h,
            eigenvalues,
        }
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn grid_spacing(&self) -> f64 {
        self.h
    }

    /// Eigenvalues ordered by mode index `j = 1..n`; all strictly negative and
    /// decreasing.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub(crate) fn dst(&self) -> &DstI {
        &self.dst
    }
}

/// Reusable buffers for [`SylvesterKernel`] operations; keep one per thread.
#[derive(Debug, Default)]
pub struct SylvesterWorkspace {
    transposed: Vec<Complex64>,
}

/// Fast-diagonalization operator for `A X + X B` where `A` is circulant
/// (size `n_z`, z-direction) and `B` is the Dirichlet second difference
/// (size `n_x`, x-direction).
#[derive(Debug, Clone)]
pub struct SylvesterKernel {
    a: CirculantSpectrum,
    b: SineSpectrum,
    min_separation: f64,
}

impl SylvesterKernel {
    /// Builds the kernel, verifying that `eig(A)` and `eig(-B)` are separated
    /// by at least [`COLLISION_TOL`] so every solve is well posed.
    pub fn new(a: CirculantSpectrum, b: SineSpectrum) -> Result<Self, SpectralError> {
        let mut min_separation = f64::INFINITY;
        let mut arg = (0, 0);
        for (p, la) in a.eigenvalues().iter().enumerate() {
            for (q, lb) in b.eigenvalues().iter().enumerate() {
                let sep = (la + lb).norm();
                if sep < min_separation {
                    min_separation = sep;
                    arg = (p, q);
                }
            }
        }
        if min_separation < COLLISION_TOL {
            return Err(SpectralError::SpectrumCollision {
                p: arg.0,
                q: arg.1,
                separation: min_separation,
            });
        }
        Ok(SylvesterKernel {
            a,
            b,
            min_separation,
        })
    }

    /// z-dimension (rows of the unknown).
    pub fn rows(&self) -> usize {
        self.a.len()
    }

    /// x-dimension (columns of the unknown).
    pub fn cols(&self) -> usize {
        self.b.len()
    }

    pub fn a_spectrum(&self) -> &CirculantSpectrum {
        &self.a
    }

    pub fn b_spectrum(&self) -> &SineSpectrum {
        &self.b
    }

    /// Smallest `|lambda_A + lambda_B|` over all mode pairs.
    pub fn min_separation(&self) -> f64 {
        self.min_separation
    }

    /// Solves `A X + X B = C` in place (`m` holds `C` on entry, `X` on exit).
    pub fn solve_in_place(&self, m: &mut CMatrix, ws: &mut SylvesterWorkspace) {
        self.eigenbasis_op(m, ws, true);
    }

    /// Allocating convenience wrapper around [`Self::solve_in_place`].
    pub fn solve(&self, c: &CMatrix) -> CMatrix {
        let mut x = c.clone();
        self.solve_in_place(&mut x, &mut SylvesterWorkspace::default());
        x
    }

    /// Computes `A X + X B` in place via the same transforms as the solve.
    pub fn apply_in_place(&self, m: &mut CMatrix, ws: &mut SylvesterWorkspace) {
        self.eigenbasis_op(m, ws, false);
    }

    pub fn apply(&self, x: &CMatrix) -> CMatrix {
        let mut y = x.clone();
        self.apply_in_place(&mut y, &mut SylvesterWorkspace::default());
        y
    }

    /// Shared pipeline: forward-transform to the joint eigenbasis, divide or
    /// multiply by `lambda_A[p] + lambda_B[q]`, transform back.
    ///
    /// Column FFTs run directly on the column-major buffer; the sine
    /// transforms act on rows, so the pipeline works on an explicit transpose
    /// where those rows are contiguous (cache-friendly and trivially
    /// chunkable across workers).
    fn eigenbasis_op(&self, m: &mut CMatrix, ws: &mut SylvesterWorkspace, solve: bool) {
        let nz = self.rows();
        let nx = self.cols();
        assert_eq!(m.rows(), nz, "row count does not match kernel");
        assert_eq!(m.cols(), nx, "column count does not match kernel");

        // Combined normalisation: 1/n_z from the inverse DFT pair and
        // 2/(n_x + 1) from applying the sine basis twice.
        let scale = 2.0 / ((nx as f64 + 1.0) * nz as f64);

        let dft = self.a.dft();
        par::column_chunks(m.as_mut_slice(), nz, Vec::new, |chunk, scratch| {
            dft.forward(chunk, scratch);
        });

        ws.transposed.resize(nz * nx, Complex64::default());
        transpose(m.as_slice(), nz, nx, &mut ws.transposed);

        // One pass per z-mode p: DST, eigenvalue divide/multiply, DST.
        let dst = self.b.dst();
        let eig_a = self.a.eigenvalues();
        let eig_b = self.b.eigenvalues();
        par::indexed_columns(&mut ws.transposed, nx, DstWork::default, |p, col, work| {
            dst.apply(col, work);
            let la = eig_a[p];
            for (q, v) in col.iter_mut().enumerate() {
                let denom = la + eig_b[q];
                if solve {
                    *v *= scale / denom;
                } else {
                    *v *= denom * scale;
                }
            }
            dst.apply(col, work);
        });

        transpose(&ws.transposed, nx, nz, m.as_mut_slice());

        par::column_chunks(m.as_mut_slice(), nz, Vec::new, |chunk, scratch| {
            dft.inverse(chunk, scratch);
        });
    }
}

/// Out-of-place transpose of a column-major `rows x cols` buffer, tiled for
/// cache locality.
fn transpose(src: &[Complex64], rows: usize, cols: usize, dst: &mut [Complex64]) {
    debug_assert_eq!(src.len(), rows * cols);
    debug_assert_eq!(dst.len(), rows * cols);
    const TILE: usize = 32;
    for c0 in (0..cols).step_by(TILE) {
        let c1 = (c0 + TILE).min(cols);
        for r0 in (0..rows).step_by(TILE) {
            let r1 = (r0 + TILE).min(rows);
            for c in c0..c1 {
                for r in r0..r1 {
                    dst[c + r * cols] = src[r + c * rows];
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Matrix;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// First column of the periodic second-difference stencil `D_zz`.
    fn dzz_first_column(n: usize, h: f64) -> Vec<Complex64> {
        let mut col = vec![Complex64::default(); n];
        col[0] = c(-2.0 / (h * h), 0.0);
        col[1] = c(1.0 / (h * h), 0.0);
        col[n - 1] += c(1.0 / (h * h), 0.0);
        col
    }

    #[test]
    fn circulant_spectrum_of_periodic_second_difference() {
        // n_z = 4, h_z = 1/4: eigenvalues of 16 * circ(-2, 1, 0, 1).
        let spec = CirculantSpectrum::new(&dzz_first_column(4, 0.25));
        let expected = [0.0, -32.0, -64.0, -32.0];
        for (lam, want) in spec.eigenvalues().iter().zip(expected) {
            assert!((lam - c(want, 0.0)).norm() < 1e-12, "{lam} vs {want}");
        }
    }

    #[test]
    fn constant_diagonal_first_column_is_a_scaled_identity() {
        // circ(2, 0, 0, 0) = 2I, so every eigenvalue is 2.
        let spec = CirculantSpectrum::new(&[c(2.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        for lam in spec.eigenvalues() {
            assert!((lam - c(2.0, 0.0)).norm() < 1e-14, "{lam}");
        }
    }

    #[test]
    fn spectrum_is_linear_in_the_first_column() {
        let n = 6;
        let col: Vec<Complex64> = (0..n)
            .map(|j| c((j as f64 * 1.3).sin(), (j as f64 * 0.9).cos()))
            .collect();
        let alpha = c(3.0, 2.0);
        let scaled: Vec<Complex64> = col.iter().map(|z| alpha * z).collect();
        let base = CirculantSpectrum::new(&col);
        let spec = CirculantSpectrum::new(&scaled);
        for (lam, mu) in spec.eigenvalues().iter().zip(base.eigenvalues()) {
            assert!((lam - alpha * mu).norm() <= 1e-12 * mu.norm().max(1.0));
        }
    }

    #[test]
    fn circulant_apply_matches_dense_multiplication() {
        let n = 7;
        let col: Vec<Complex64> = (0..n)
            .map(|j| c((j as f64 * 0.7).sin(), (j as f64 * 0.3).cos()))
            .collect();
        let spec = CirculantSpectrum::new(&col);
        let x: Vec<Complex64> = (0..n).map(|j| c(j as f64 - 2.0, 0.5 * j as f64)).collect();

        let mut fast = x.clone();
        spec.apply(&mut fast);

        for i in 0..n {
            let mut dense = Complex64::default();
            for j in 0..n {
                dense += col[(n + i - j) % n] * x[j];
            }
            assert!(
                (fast[i] - dense).norm() <= 1e-12 * dense.norm().max(1.0),
                "entry {i}: {} vs {}",
                fast[i],
                dense
            );
        }
    }

    #[test]
    fn sine_spectrum_single_interior_point() {
        // n = 1, h = 1/2: D_xx = [-8], eigenvalue -8.
        let spec = SineSpectrum::new(1, 0.5);
        assert!((spec.eigenvalues()[0] + 8.0).abs() < 1e-13);
    }

    #[test]
    fn sine_eigenpairs_satisfy_dirichlet_stencil() {
        let n = 6;
        let h = 0.31;
        let spec = SineSpectrum::new(n, h);
        for (q, &lam) in spec.eigenvalues().iter().enumerate() {
            assert!(lam < 0.0);
            if q > 0 {
                assert!(lam < spec.eigenvalues()[q - 1]);
            }
            // Residual of the claimed eigenpair under the assembled stencil.
            let w: Vec<f64> = (1..=n)
                .map(|j| ((j * (q + 1)) as f64 * std::f64::consts::PI / (n as f64 + 1.0)).sin())
                .collect();
            for j in 0..n {
                let left = if j > 0 { w[j - 1] } else { 0.0 };
                let right = if j + 1 < n { w[j + 1] } else { 0.0 };
                let stencil = (left - 2.0 * w[j] + right) / (h * h);
                assert!(
                    (stencil - lam * w[j]).abs() < 1e-10 * lam.abs(),
                    "mode {q}, row {j}"
                );
            }
        }
    }

    fn test_kernel(nz: usize, nx: usize) -> SylvesterKernel {
        // Shifted periodic stencil: adding a complex shift keeps the circulant
        // spectrum away from eig(-D_xx).
        let hz = 1.0 / nz as f64;
        let mut col = dzz_first_column(nz, hz);
        col[0] += c(0.3, -1.1);
        let a = CirculantSpectrum::new(&col);
        let b = SineSpectrum::new(nx, 0.17);
        SylvesterKernel::new(a, b).expect("spectra should be separated")
    }

    #[test]
    fn sylvester_solve_then_apply_roundtrips() {
        let (nz, nx) = (9, 13);
        let kernel = test_kernel(nz, nx);
        let rhs = Matrix::from_fn(nz, nx, |k, l| {
            c(
                ((k * 3 + l) as f64 * 0.41).sin(),
                ((k + 2 * l) as f64 * 0.23).cos(),
            )
        });
        let x = kernel.solve(&rhs);
        let back = kernel.apply(&x);
        let mut err: f64 = 0.0;
        for (a, b) in back.as_slice().iter().zip(rhs.as_slice()) {
            err = err.max((a - b).norm());
        }
        assert!(err <= 1e-12 * rhs.max_abs(), "roundtrip error {err}");
    }

    #[test]
    fn zero_right_hand_side_solves_to_zero() {
        let kernel = test_kernel(5, 9);
        let x = kernel.solve(&Matrix::zeros(5, 9));
        assert!(x.as_slice().iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn sylvester_apply_matches_direct_stencils() {
        let (nz, nx) = (5, 4);
        let hz = 1.0 / nz as f64;
        let hx = 0.17;
        let kernel = test_kernel(nz, nx);
        let x = Matrix::from_fn(nz, nx, |k, l| c((k + 1) as f64, (l as f64) - 1.5));
        let y = kernel.apply(&x);

        let shift = c(0.3, -1.1);
        for l in 0..nx {
            for k in 0..nz {
                // A X: periodic second difference plus the complex shift.
                let up = x.get((k + nz - 1) % nz, l);
                let down = x.get((k + 1) % nz, l);
                let az = (up - 2.0 * x.get(k, l) + down) / (hz * hz) + shift * x.get(k, l);
                // X B: Dirichlet second difference along the row.
                let left = if l > 0 { x.get(k, l - 1) } else { c(0.0, 0.0) };
                let right = if l + 1 < nx { x.get(k, l + 1) } else { c(0.0, 0.0) };
                let bx = (left - 2.0 * x.get(k, l) + right) / (hx * hx);
                let want = az + bx;
                assert!(
                    (y.get(k, l) - want).norm() <= 1e-10 * want.norm().max(1.0),
                    "entry ({k},{l})"
                );
            }
        }
    }

    #[test]
    fn colliding_spectra_are_rejected() {
        // B = [-8] (n = 1, h = 1/2); A = [8] makes lambda_A + lambda_B = 0.
        let a = CirculantSpectrum::new(&[c(8.0, 0.0)]);
        let b = SineSpectrum::new(1, 0.5);
        match SylvesterKernel::new(a, b) {
            Err(SpectralError::SpectrumCollision { separation, .. }) => {
                assert!(separation < COLLISION_TOL);
            }
            Ok(_) => panic!("collision not detected"),
        }
    }
}
