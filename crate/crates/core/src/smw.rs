//! Sylvester-plus-low-rank preconditioner for the Schur operator.
//!
//! The Schur action splits as `S = L + Phi` where `L X = A X + X B` has a
//! fast direct solver and `Phi` carries the medium contrast and the boundary
//! couplings. Replacing `Phi` with its coarse-space compression
//!
//! ```text
//! Pi(X) = sum_k W_k(X) E_k,    W_k(X) = mean of X over cell k,
//!                              E_k    = Phi(indicator of cell k),
//! ```
//!
//! gives the structured operator `L + Pi`, which the preconditioner inverts
//! *exactly* by the Sherman-Morrison-Woodbury identity:
//!
//! ```text
//! solve W a = g,  W = I + [ W_j(L^{-1} E_k) ],  g_j = W_j(L^{-1} C),
//! X = L^{-1} ( C - sum_k a_k E_k ).
//! ```
//!
//! Every application costs exactly two Sylvester solves plus one small dense
//! triangular solve. The setup cost is one Sylvester solve per coarse cell;
//! these are independent, so they run in parallel, and each worker holds at
//! most one dense cell image at a time.

use std::sync::atomic::{AtomicUsize, Ordering};

use num_complex::Complex64;
use thiserror::Error;

use crate::coarse::CoarseGrid;
use crate::dtn::Side;
use crate::krylov::LinearOp;
use crate::linalg::{LinalgError, LuFactors};
use crate::matrix::CMatrix;
use crate::par;
use crate::schur::SchurAction;
use crate::spectral::SylvesterWorkspace;

#[derive(Debug, Error)]
pub enum SmwError {
    #[error(
        "coarse grid is for a {grid_nx} x {grid_nz} interior, problem has {nx} x {nz}"
    )]
    GridMismatch {
        grid_nx: usize,
        grid_nz: usize,
        nx: usize,
        nz: usize,
    },
    #[error(
        "coarse space of {coarse} cells is too dense for {interior} interior unknowns \
         (at most interior/4 cells)"
    )]
    CoarseSpaceTooLarge { coarse: usize, interior: usize },
    #[error("coupling matrix is numerically singular: {0}")]
    SingularCoupling(LinalgError),
    #[error("coupling matrix must be {expected} x {expected}, got {rows} x {cols}")]
    CouplingShape {
        expected: usize,
        rows: usize,
        cols: usize,
    },
}

/// Sparse description of one `E_k = Phi(1_cell)`: the Hadamard part is
/// `K - k_bar` restricted to the cell (read off the problem on demand), and
/// the boundary part is at most one dense column on each side.
struct StructuredCell {
    xs: std::ops::Range<usize>,
    zs: std::ops::Range<usize>,
    /// `P_-^{-1}(w 1_zs)`, subtracted from grid column 0.
    left: Option<Vec<Complex64>>,
    /// `P_+^{-1}(w 1_zs)`, subtracted from grid column `n_x - 1`.
    right: Option<Vec<Complex64>>,
}

/// Tracks how many dense cell images are alive during the precompute.
struct BufferGauge {
    live: AtomicUsize,
    peak: AtomicUsize,
}

struct BufferGuard<'g>(&'g BufferGauge);

impl BufferGauge {
    fn new() -> Self {
        BufferGauge {
            live: AtomicUsize::new(0),
            peak: AtomicUsize::new(0),
        }
    }

    fn enter(&self) -> BufferGuard<'_> {
        let live = self.live.fetch_add(1, Ordering::SeqCst) + 1;
        self.peak.fetch_max(live, Ordering::SeqCst);
        BufferGuard(self)
    }

    fn peak(&self) -> usize {
        self.peak.load(Ordering::SeqCst)
    }
}

impl Drop for BufferGuard<'_> {
    fn drop(&mut self) {
        self.0.live.fetch_sub(1, Ordering::SeqCst);
    }
}

/// Exact inverse of the structured operator `L + Pi`.
pub struct SmwPreconditioner<'a> {
    schur: &'a SchurAction<'a>,
    grid: CoarseGrid,
    cells: Vec<StructuredCell>,
    coupling: CMatrix,
    lu: LuFactors,
    peak_buffers: usize,
}

impl<'a> SmwPreconditioner<'a> {
    /// Builds the preconditioner, running one Sylvester solve per coarse
    /// cell on the current worker pool.
    pub fn build(schur: &'a SchurAction<'a>, grid: CoarseGrid) -> Result<Self, SmwError> {
        let cells = Self::validate(schur, &grid)?;
        let n = grid.len();
        let mut coupling = CMatrix::zeros(n, n);
        let gauge = BufferGauge::new();
        let gauge_ref = &gauge;
        let schur_ref = schur;
        let grid_ref = &grid;
        let cells_ref = &cells;
        par::indexed_columns(
            coupling.as_mut_slice(),
            n,
            SylvesterWorkspace::default,
            |k, col, ws| {
                let _alive = gauge_ref.enter();
                let mut image = materialize_cell(schur_ref, &cells_ref[k]);
                schur_ref.kernel().solve_in_place(&mut image, ws);
                for (j, slot) in col.iter_mut().enumerate() {
                    *slot = grid_ref.cell_mean(&image, j);
                }
                col[k] += 1.0;
            },
        );
        let lu = LuFactors::new(coupling.clone()).map_err(SmwError::SingularCoupling)?;
        Ok(SmwPreconditioner {
            schur,
            grid,
            cells,
            coupling,
            lu,
            peak_buffers: gauge.peak(),
        })
    }

    /// Rebuilds the preconditioner from a previously computed coupling
    /// matrix (e.g. loaded from a cache), skipping the per-cell solves. The
    /// factorization is deterministic, so this reproduces `build` bit for
    /// bit when the coupling matches.
    pub fn from_coupling(
        schur: &'a SchurAction<'a>,
        grid: CoarseGrid,
        coupling: CMatrix,
    ) -> Result<Self, SmwError> {
        let cells = Self::validate(schur, &grid)?;
        if coupling.rows() != grid.len() || coupling.cols() != grid.len() {
            return Err(SmwError::CouplingShape {
                expected: grid.len(),
                rows: coupling.rows(),
                cols: coupling.cols(),
            });
        }
        let lu = LuFactors::new(coupling.clone()).map_err(SmwError::SingularCoupling)?;
        Ok(SmwPreconditioner {
            schur,
            grid,
            cells,
            coupling,
            lu,
            peak_buffers: 0,
        })
    }

    fn validate(
        schur: &SchurAction<'_>,
        grid: &CoarseGrid,
    ) -> Result<Vec<StructuredCell>, SmwError> {
        let prob = schur.problem();
        if grid.n_x() != prob.n_x() || grid.n_z() != prob.n_z() {
            return Err(SmwError::GridMismatch {
                grid_nx: grid.n_x(),
                grid_nz: grid.n_z(),
                nx: prob.n_x(),
                nz: prob.n_z(),
            });
        }
        let interior = prob.interior_len();
        if grid.len() * 4 > interior {
            return Err(SmwError::CoarseSpaceTooLarge {
                coarse: grid.len(),
                interior,
            });
        }
        Ok((0..grid.len()).map(|k| build_cell(schur, grid, k)).collect())
    }

    pub fn schur(&self) -> &SchurAction<'a> {
        self.schur
    }

    pub fn grid(&self) -> &CoarseGrid {
        &self.grid
    }

    /// The Woodbury coupling matrix `W` (unfactored), e.g. for caching.
    pub fn coupling(&self) -> &CMatrix {
        &self.coupling
    }

    /// Largest number of dense cell images alive at once during `build`
    /// (0 when the coupling came from a cache).
    pub fn peak_precompute_buffers(&self) -> usize {
        self.peak_buffers
    }

    /// Dense `E_k`, materialized. Diagnostic; the solver never forms these.
    pub fn coarse_matrix(&self, k: usize) -> CMatrix {
        materialize_cell(self.schur, &self.cells[k])
    }

    /// Forward action `(L + Pi) x` of the operator this preconditioner
    /// inverts. Diagnostic counterpart of [`Self::apply_matrix`].
    pub fn forward(&self, x: &CMatrix) -> CMatrix {
        let mut out = self.schur.kernel().apply(x);
        let means = self.grid.cell_means(x);
        for (cell, &mk) in self.cells.iter().zip(&means) {
            add_scaled_cell(self.schur, cell, mk, &mut out);
        }
        out
    }

    /// `(L + Pi)^{-1} c` via the Woodbury identity: exactly two Sylvester
    /// solves and one dense back-substitution.
    pub fn apply_matrix(&self, c: &CMatrix) -> CMatrix {
        let mut ws = SylvesterWorkspace::default();
        let mut g = c.clone();
        self.schur.kernel().solve_in_place(&mut g, &mut ws);
        let mut alpha = self.grid.cell_means(&g);
        self.lu.solve_in_place(&mut alpha);

        let mut rhs = c.clone();
        for (cell, &a) in self.cells.iter().zip(&alpha) {
            add_scaled_cell(self.schur, cell, -a, &mut rhs);
        }
        self.schur.kernel().solve_in_place(&mut rhs, &mut ws);
        rhs
    }
}

impl LinearOp for SmwPreconditioner<'_> {
    fn dim(&self) -> usize {
        self.schur.problem().interior_len()
    }

    fn apply(&self, x: &[Complex64], out: &mut [Complex64]) {
        let prob = self.schur.problem();
        let c = CMatrix::from_vec(prob.n_z(), prob.n_x(), x.to_vec());
        out.copy_from_slice(self.apply_matrix(&c).as_slice());
    }
}

fn build_cell(schur: &SchurAction<'_>, grid: &CoarseGrid, k: usize) -> StructuredCell {
    let prob = schur.problem();
    let (xs, zs) = grid.cell(k);
    let mut sides = [None, None];
    for (slot, side) in sides.iter_mut().zip([Side::Minus, Side::Plus]) {
        let weight: f64 = xs.clone().map(|l| schur.boundary_weight(side, l)).sum();
        if weight != 0.0 {
            let mut t = vec![Complex64::default(); prob.n_z()];
            for z in zs.clone() {
                t[z] = Complex64::new(weight, 0.0);
            }
            schur.maps().apply_p_inverse(side, &mut t);
            *slot = Some(t);
        }
    }
    let [left, right] = sides;
    StructuredCell { xs, zs, left, right }
}

/// Dense image of `E_k`.
fn materialize_cell(schur: &SchurAction<'_>, cell: &StructuredCell) -> CMatrix {
    let prob = schur.problem();
    let mut m = CMatrix::zeros(prob.n_z(), prob.n_x());
    add_scaled_cell(schur, cell, Complex64::new(1.0, 0.0), &mut m);
    m
}

/// `m += coeff * E_k`.
fn add_scaled_cell(
    schur: &SchurAction<'_>,
    cell: &StructuredCell,
    coeff: Complex64,
    m: &mut CMatrix,
) {
    if coeff.norm() == 0.0 {
        return;
    }
    let prob = schur.problem();
    let k_grid = prob.k();
    let k_bar = schur.k_bar();
    for l in cell.xs.clone() {
        let col = m.col_mut(l);
        for z in cell.zs.clone() {
            col[z] += coeff * (k_grid.get(z, l) - k_bar);
        }
    }
    if let Some(t) = &cell.left {
        for (slot, &v) in m.col_mut(0).iter_mut().zip(t) {
            *slot -= coeff * v;
        }
    }
    if let Some(t) = &cell.right {
        let n_x = prob.n_x();
        for (slot, &v) in m.col_mut(n_x - 1).iter_mut().zip(t) {
            *slot -= coeff * v;
        }
    }
}
