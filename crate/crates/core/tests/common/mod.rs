//! Dense reference implementations used to cross-check the matrix-free
//! production code. Everything here is assembled from the block definitions
//! with naive loops (explicit Kronecker products, DFT sums, Gaussian
//! elimination) and shares no code path with the FFT/stencil routes under
//! test.

#![allow(dead_code)]

use num_complex::Complex64;
use wep_core::problem::DiscreteProblem;
use wep_core::CMatrix;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn eye(n: usize) -> CMatrix {
    CMatrix::from_fn(n, n, |i, j| {
        if i == j {
            c(1.0, 0.0)
        } else {
            Complex64::default()
        }
    })
}

/// Circulant matrix with the given first column.
pub fn circulant_dense(first_col: &[Complex64]) -> CMatrix {
    let n = first_col.len();
    CMatrix::from_fn(n, n, |i, j| first_col[(i + n - j) % n])
}

/// Periodic central first difference: `(D_z x)_k = (x_{k-1} - x_{k+1}) / 2h`.
pub fn dz_dense(n: usize, h: f64) -> CMatrix {
    let mut col = vec![Complex64::default(); n];
    col[1] = c(1.0 / (2.0 * h), 0.0);
    col[n - 1] = c(-1.0 / (2.0 * h), 0.0);
    circulant_dense(&col)
}

/// Periodic second difference `(x_{k-1} - 2 x_k + x_{k+1}) / h^2`.
pub fn dzz_dense(n: usize, h: f64) -> CMatrix {
    let mut col = vec![Complex64::default(); n];
    col[0] = c(-2.0 / (h * h), 0.0);
    col[1] = c(1.0 / (h * h), 0.0);
    col[n - 1] += c(1.0 / (h * h), 0.0);
    circulant_dense(&col)
}

/// Dirichlet second difference on `n` interior points.
pub fn dxx_dense(n: usize, h: f64) -> CMatrix {
    let h2 = 1.0 / (h * h);
    CMatrix::from_fn(n, n, |i, j| {
        if i == j {
            c(-2.0 * h2, 0.0)
        } else if i.abs_diff(j) == 1 {
            c(h2, 0.0)
        } else {
            Complex64::default()
        }
    })
}

/// Kronecker product `a (x) b`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ar, ac, br, bc) = (a.rows(), a.cols(), b.rows(), b.cols());
    CMatrix::from_fn(ar * br, ac * bc, |i, j| {
        a.get(i / br, j / bc) * b.get(i % br, j % bc)
    })
}

pub fn matmul(a: &CMatrix, b: &CMatrix) -> CMatrix {
    assert_eq!(a.cols(), b.rows());
    CMatrix::from_fn(a.rows(), b.cols(), |i, j| {
        (0..a.cols()).map(|k| a.get(i, k) * b.get(k, j)).sum()
    })
}

pub fn matvec(a: &CMatrix, x: &[Complex64]) -> Vec<Complex64> {
    assert_eq!(a.cols(), x.len());
    (0..a.rows())
        .map(|i| (0..a.cols()).map(|k| a.get(i, k) * x[k]).sum())
        .collect()
}

pub fn adjoint(a: &CMatrix) -> CMatrix {
    CMatrix::from_fn(a.cols(), a.rows(), |i, j| a.get(j, i).conj())
}

pub fn add(a: &CMatrix, b: &CMatrix) -> CMatrix {
    CMatrix::from_fn(a.rows(), a.cols(), |i, j| a.get(i, j) + b.get(i, j))
}

pub fn sub(a: &CMatrix, b: &CMatrix) -> CMatrix {
    CMatrix::from_fn(a.rows(), a.cols(), |i, j| a.get(i, j) - b.get(i, j))
}

pub fn scale(a: &CMatrix, s: Complex64) -> CMatrix {
    CMatrix::from_fn(a.rows(), a.cols(), |i, j| s * a.get(i, j))
}

/// Gaussian elimination with partial pivoting (independent of the
/// production LU; used only as a reference solver).
pub fn gauss_solve(a: &CMatrix, b: &[Complex64]) -> Vec<Complex64> {
    let n = a.rows();
    assert_eq!(a.cols(), n);
    assert_eq!(b.len(), n);
    // Augmented system rows.
    let mut rows: Vec<Vec<Complex64>> = (0..n)
        .map(|i| {
            let mut row: Vec<Complex64> = (0..n).map(|j| a.get(i, j)).collect();
            row.push(b[i]);
            row
        })
        .collect();
    for k in 0..n {
        let piv = (k..n)
            .max_by(|&i, &j| {
                rows[i][k]
                    .norm()
                    .partial_cmp(&rows[j][k].norm())
                    .unwrap()
            })
            .unwrap();
        rows.swap(k, piv);
        let pivot = rows[k][k];
        assert!(pivot.norm() > 0.0, "singular reference system at step {k}");
        for i in k + 1..n {
            let factor = rows[i][k] / pivot;
            for j in k..=n {
                let delta = factor * rows[k][j];
                rows[i][j] -= delta;
            }
        }
    }
    let mut x = vec![Complex64::default(); n];
    for i in (0..n).rev() {
        let mut acc = rows[i][n];
        for j in i + 1..n {
            acc -= rows[i][j] * x[j];
        }
        x[i] = acc / rows[i][i];
    }
    x
}

/// Solves `A X = B` column by column.
pub fn gauss_solve_many(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let mut out = CMatrix::zeros(b.rows(), b.cols());
    for j in 0..b.cols() {
        let col = gauss_solve(a, b.col(j));
        out.col_mut(j).copy_from_slice(&col);
    }
    out
}

/// DtN symbol `s_k(gamma)` for exterior wavenumber `kappa`:
/// `beta = (gamma + 2 pi i k)^2 + kappa^2`, `s = sign(Im beta) i sqrt(beta)`
/// with `sign(0) = +1` and the principal square root.
pub fn dtn_symbol(gamma: Complex64, kappa: f64, k: i64) -> Complex64 {
    let shifted = gamma + c(0.0, 2.0 * std::f64::consts::PI * k as f64);
    let beta = shifted * shifted + kappa * kappa;
    let sign = if beta.im < 0.0 { -1.0 } else { 1.0 };
    sign * c(0.0, 1.0) * beta.sqrt()
}

/// `d s_k / d gamma = sign(Im beta) i (gamma + 2 pi i k) / sqrt(beta)`.
pub fn dtn_symbol_prime(gamma: Complex64, kappa: f64, k: i64) -> Complex64 {
    let shifted = gamma + c(0.0, 2.0 * std::f64::consts::PI * k as f64);
    let beta = shifted * shifted + kappa * kappa;
    let sign = if beta.im < 0.0 { -1.0 } else { 1.0 };
    sign * c(0.0, 1.0) * shifted / beta.sqrt()
}

/// Dense boundary operator `R diag(lambda_k) R^{-1}` on `n_z` points via the
/// explicit DFT sum, with `lambda_k = s_k + shift` (or `s'_k` when `prime`).
pub fn boundary_dense(
    n_z: usize,
    gamma: Complex64,
    kappa: f64,
    shift: f64,
    prime: bool,
) -> CMatrix {
    let p = (n_z - 1) / 2;
    let tau = 2.0 * std::f64::consts::PI / n_z as f64;
    CMatrix::from_fn(n_z, n_z, |a, b| {
        let mut acc = Complex64::default();
        for m in 0..n_z {
            let k = m as i64 - p as i64;
            let lambda = if prime {
                dtn_symbol_prime(gamma, kappa, k)
            } else {
                dtn_symbol(gamma, kappa, k) + shift
            };
            // R[a, m] conj(R[b, m]) / n_z with R[j, m] = exp(2 pi i k j / n_z).
            let phase = c(0.0, tau * k as f64 * (a as f64 - b as f64)).exp();
            acc += lambda * phase;
        }
        acc / n_z as f64
    })
}

/// Interior block `Q(gamma) = I (x) (D_zz + 2 gamma D_z + gamma^2 I)
/// + D_xx^T (x) I + diag(vec K)`.
pub fn dense_q(prob: &DiscreteProblem, gamma: Complex64) -> CMatrix {
    let (n_x, n_z) = (prob.n_x(), prob.n_z());
    let az = {
        let dzz = dzz_dense(n_z, prob.h_z());
        let dz = dz_dense(n_z, prob.h_z());
        let mut m = add(&dzz, &scale(&dz, 2.0 * gamma));
        for i in 0..n_z {
            let v = m.get(i, i) + gamma * gamma;
            m.set(i, i, v);
        }
        m
    };
    let mut q = add(
        &kron(&eye(n_x), &az),
        &kron(&dxx_dense(n_x, prob.h_x()), &eye(n_z)),
    );
    let k_grid = prob.k();
    for l in 0..n_x {
        for k in 0..n_z {
            let i = l * n_z + k;
            let v = q.get(i, i) + k_grid.get(k, l);
            q.set(i, i, v);
        }
    }
    q
}

/// `C_1`: distributes the exterior traces onto the first and last interior
/// grid columns with weight `1/h_x^2`.
pub fn dense_c1(prob: &DiscreteProblem) -> CMatrix {
    let (n_x, n_z) = (prob.n_x(), prob.n_z());
    let w = 1.0 / (prob.h_x() * prob.h_x());
    let mut m = CMatrix::zeros(n_x * n_z, 2 * n_z);
    for k in 0..n_z {
        m.set(k, k, c(w, 0.0));
        m.set((n_x - 1) * n_z + k, n_z + k, c(w, 0.0));
    }
    m
}

/// `C_2^T`: one-sided second-order derivative stencils toward the boundary.
pub fn dense_c2t(prob: &DiscreteProblem) -> CMatrix {
    let (n_x, n_z) = (prob.n_x(), prob.n_z());
    let (d1, d2) = (prob.d1(), prob.d2());
    let mut m = CMatrix::zeros(2 * n_z, n_x * n_z);
    for k in 0..n_z {
        m.set(k, k, c(d1, 0.0));
        m.set(k, n_z + k, c(d2, 0.0));
        m.set(n_z + k, (n_x - 1) * n_z + k, c(d1, 0.0));
        m.set(n_z + k, (n_x - 2) * n_z + k, c(d2, 0.0));
    }
    m
}

/// Full dense `M(gamma)`.
pub fn dense_m(prob: &DiscreteProblem, gamma: Complex64) -> CMatrix {
    let (n_x, n_z) = (prob.n_x(), prob.n_z());
    let ni = n_x * n_z;
    let dim = ni + 2 * n_z;
    let q = dense_q(prob, gamma);
    let c1 = dense_c1(prob);
    let c2t = dense_c2t(prob);
    let geom = prob.geometry();
    let p_minus = boundary_dense(n_z, gamma, geom.kappa_minus, prob.d0(), false);
    let p_plus = boundary_dense(n_z, gamma, geom.kappa_plus, prob.d0(), false);

    let mut m = CMatrix::zeros(dim, dim);
    for j in 0..ni {
        for i in 0..ni {
            m.set(i, j, q.get(i, j));
        }
        for i in 0..2 * n_z {
            m.set(ni + i, j, c2t.get(i, j));
        }
    }
    for j in 0..2 * n_z {
        for i in 0..ni {
            m.set(i, ni + j, c1.get(i, j));
        }
    }
    for j in 0..n_z {
        for i in 0..n_z {
            m.set(ni + i, ni + j, p_minus.get(i, j));
            m.set(ni + n_z + i, ni + n_z + j, p_plus.get(i, j));
        }
    }
    m
}

/// Full dense `M'(gamma)`: interior `I (x) (2 D_z + 2 gamma I)`, boundary
/// `R diag(s') R^{-1}`, off-diagonal blocks zero.
pub fn dense_m_prime(prob: &DiscreteProblem, gamma: Complex64) -> CMatrix {
    let (n_x, n_z) = (prob.n_x(), prob.n_z());
    let ni = n_x * n_z;
    let dim = ni + 2 * n_z;
    let mut az = scale(&dz_dense(n_z, prob.h_z()), c(2.0, 0.0));
    for i in 0..n_z {
        let v = az.get(i, i) + 2.0 * gamma;
        az.set(i, i, v);
    }
    let qp = kron(&eye(n_x), &az);
    let geom = prob.geometry();
    let pp_minus = boundary_dense(n_z, gamma, geom.kappa_minus, 0.0, true);
    let pp_plus = boundary_dense(n_z, gamma, geom.kappa_plus, 0.0, true);

    let mut m = CMatrix::zeros(dim, dim);
    for j in 0..ni {
        for i in 0..ni {
            m.set(i, j, qp.get(i, j));
        }
    }
    for j in 0..n_z {
        for i in 0..n_z {
            m.set(ni + i, ni + j, pp_minus.get(i, j));
            m.set(ni + n_z + i, ni + n_z + j, pp_plus.get(i, j));
        }
    }
    m
}

/// Dense Schur complement `S(sigma) = Q - C_1 P(sigma)^{-1} C_2^T`.
pub fn dense_schur(prob: &DiscreteProblem, sigma: Complex64) -> CMatrix {
    let n_z = prob.n_z();
    let q = dense_q(prob, sigma);
    let c1 = dense_c1(prob);
    let c2t = dense_c2t(prob);
    let geom = prob.geometry();
    let p_minus = boundary_dense(n_z, sigma, geom.kappa_minus, prob.d0(), false);
    let p_plus = boundary_dense(n_z, sigma, geom.kappa_plus, prob.d0(), false);

    // P^{-1} C_2^T, blockwise.
    let top = CMatrix::from_fn(n_z, c2t.cols(), |i, j| c2t.get(i, j));
    let bottom = CMatrix::from_fn(n_z, c2t.cols(), |i, j| c2t.get(n_z + i, j));
    let pm_inv_top = gauss_solve_many(&p_minus, &top);
    let pp_inv_bottom = gauss_solve_many(&p_plus, &bottom);
    let mut p_inv_c2t = CMatrix::zeros(2 * n_z, c2t.cols());
    for j in 0..c2t.cols() {
        for i in 0..n_z {
            p_inv_c2t.set(i, j, pm_inv_top.get(i, j));
            p_inv_c2t.set(n_z + i, j, pp_inv_bottom.get(i, j));
        }
    }
    sub(&q, &matmul(&c1, &p_inv_c2t))
}

/// Solves `A X + X B = C` through the explicit Kronecker form
/// `(I (x) A + B^T (x) I) vec(X) = vec(C)`.
pub fn kron_sylvester_solve(a: &CMatrix, b: &CMatrix, rhs: &CMatrix) -> CMatrix {
    let (n_z, n_x) = (a.rows(), b.rows());
    assert_eq!(rhs.rows(), n_z);
    assert_eq!(rhs.cols(), n_x);
    let big = add(
        &kron(&eye(n_x), a),
        &kron(
            &CMatrix::from_fn(n_x, n_x, |i, j| b.get(j, i)),
            &eye(n_z),
        ),
    );
    let x = gauss_solve(&big, rhs.as_slice());
    CMatrix::from_vec(n_z, n_x, x)
}

/// `||A^{-1} b|| / ||b||`; spikes when `A` is nearly singular.
pub fn resolvent_gain(a: &CMatrix, b: &[Complex64]) -> f64 {
    let x = gauss_solve(a, b);
    let num: f64 = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    num / den
}

/// Circulant first column of the Sylvester `A` factor:
/// `D_zz + 2 sigma D_z + (sigma^2 + k_bar) I`.
pub fn sylvester_a_dense(prob: &DiscreteProblem, sigma: Complex64, k_bar: f64) -> CMatrix {
    let n_z = prob.n_z();
    let hz2 = 1.0 / (prob.h_z() * prob.h_z());
    let mut first = vec![Complex64::default(); n_z];
    first[0] = Complex64::new(-2.0 * hz2 + k_bar, 0.0) + sigma * sigma;
    first[1] += Complex64::new(hz2, 0.0) + sigma / prob.h_z();
    first[n_z - 1] += Complex64::new(hz2, 0.0) - sigma / prob.h_z();
    circulant_dense(&first)
}

/// Dense Kronecker form of the Sylvester operator `L(X) = A X + X B` acting
/// on `vec(X)` (column-major), with `A` as above and `B = D_xx`.
pub fn dense_l(prob: &DiscreteProblem, sigma: Complex64, k_bar: f64) -> CMatrix {
    let a = sylvester_a_dense(prob, sigma, k_bar);
    let b = dxx_dense(prob.n_x(), prob.h_x());
    add(
        &kron(&eye(prob.n_x()), &a),
        &kron(&CMatrix::from_fn(prob.n_x(), prob.n_x(), |i, j| b.get(j, i)), &eye(prob.n_z())),
    )
}

/// Dense matrix of the low-rank remainder `Phi = S - L` on `vec(X)`.
pub fn dense_phi_matrix(prob: &DiscreteProblem, sigma: Complex64, k_bar: f64) -> CMatrix {
    sub(&dense_schur(prob, sigma), &dense_l(prob, sigma, k_bar))
}

/// Indicator matrix of coarse cell `k` on the fine interior grid.
pub fn indicator(grid: &wep_core::CoarseGrid, k: usize) -> CMatrix {
    let (x_range, z_range) = grid.cell(k);
    let mut m = CMatrix::zeros(grid.n_z(), grid.n_x());
    for l in x_range {
        for kk in z_range.clone() {
            m.set(kk, l, Complex64::new(1.0, 0.0));
        }
    }
    m
}

/// Plain left-to-right average over a cell, independent of the pairwise
/// production summation.
pub fn naive_cell_mean(grid: &wep_core::CoarseGrid, m: &CMatrix, k: usize) -> Complex64 {
    let (x_range, z_range) = grid.cell(k);
    let mut sum = Complex64::default();
    let mut count = 0usize;
    for l in x_range {
        for kk in z_range.clone() {
            sum += m.get(kk, l);
            count += 1;
        }
    }
    sum / count as f64
}

/// Deterministic pseudo-random complex vector (SplitMix64 driven), entries
/// in the unit square.
pub fn seeded_vec(seed: u64, len: usize) -> Vec<Complex64> {
    let mut state = seed.wrapping_add(0x9e3779b97f4a7c15);
    let mut next = move || {
        state = state.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z = z ^ (z >> 31);
        (z as f64 / u64::MAX as f64) * 2.0 - 1.0
    };
    (0..len).map(|_| Complex64::new(next(), next())).collect()
}

/// `||a - b|| / max(||b||, eps)` for vectors.
pub fn rel_err(a: &[Complex64], b: &[Complex64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let diff: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt();
    let scale: f64 = b.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    diff / scale.max(f64::MIN_POSITIVE)
}
