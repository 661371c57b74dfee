//! Rectangular coarse partitions of the interior grid.
//!
//! The preconditioner freezes the non-Sylvester part of the Schur operator
//! on a coarse space of cell indicators. A coarse grid with `coarse_nz`
//! cells in the periodic z-direction uses `coarse_nz + 4` cells in x:
//! either `coarse_nz + 2` near-equal slabs whose outermost slabs are split
//! in half once more (the boundary-refined layout, resolving the rank-one
//! boundary couplings that live in the first and last grid columns), or a
//! plain equipartition for comparison.

use std::ops::Range;

use num_complex::Complex64;
use thiserror::Error;

use crate::matrix::{pairwise_sum, CMatrix};

#[derive(Debug, Error)]
pub enum CoarseError {
    #[error("grid too coarse: {direction}-direction partition into {cells} cells of {points} points has an empty cell")]
    GridTooCoarse {
        direction: &'static str,
        cells: usize,
        points: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoarseLayout {
    BoundaryRefined,
    Uniform,
}

impl CoarseLayout {
    /// Stable one-byte tag used in cache headers.
    pub fn tag(self) -> u8 {
        match self {
            CoarseLayout::BoundaryRefined => 0,
            CoarseLayout::Uniform => 1,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(CoarseLayout::BoundaryRefined),
            1 => Some(CoarseLayout::Uniform),
            _ => None,
        }
    }
}

impl std::fmt::Display for CoarseLayout {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CoarseLayout::BoundaryRefined => write!(f, "boundary-refined"),
            CoarseLayout::Uniform => write!(f, "uniform"),
        }
    }
}

/// Tensor partition of the `n_z x n_x` interior grid into rectangular cells.
///
/// Cell `k` covers x-slab `k / coarse_nz` and z-slab `k % coarse_nz`.
#[derive(Debug, Clone)]
pub struct CoarseGrid {
    layout: CoarseLayout,
    n_x: usize,
    n_z: usize,
    x_cells: Vec<Range<usize>>,
    z_cells: Vec<Range<usize>>,
}

/// `parts` contiguous ranges covering `0..n` with near-equal sizes
/// (boundaries at `floor(n * i / parts)`).
fn floor_linspace(n: usize, parts: usize) -> Vec<Range<usize>> {
    (0..parts).map(|i| (n * i / parts)..(n * (i + 1) / parts)).collect()
}

fn ensure_nonempty(
    cells: &[Range<usize>],
    direction: &'static str,
    points: usize,
) -> Result<(), CoarseError> {
    if cells.is_empty() || cells.iter().any(|r| r.is_empty()) {
        return Err(CoarseError::GridTooCoarse {
            direction,
            cells: cells.len(),
            points,
        });
    }
    Ok(())
}

impl CoarseGrid {
    /// Boundary-refined layout: `coarse_nz + 2` base x-slabs with the
    /// outermost slab on each side halved (outer half outermost).
    pub fn boundary_refined(
        n_x: usize,
        n_z: usize,
        coarse_nz: usize,
    ) -> Result<Self, CoarseError> {
        let z_cells = floor_linspace(n_z, coarse_nz);
        ensure_nonempty(&z_cells, "z", n_z)?;

        let base = floor_linspace(n_x, coarse_nz + 2);
        let mut x_cells = Vec::with_capacity(coarse_nz + 4);
        let first = base.first().cloned().unwrap_or(0..0);
        let last = base.last().cloned().unwrap_or(0..0);
        let outer = first.len() / 2;
        x_cells.push(first.start..first.start + outer);
        x_cells.push(first.start + outer..first.end);
        x_cells.extend(base[1..base.len().saturating_sub(1)].iter().cloned());
        let outer = last.len() / 2;
        x_cells.push(last.start..last.end - outer);
        x_cells.push(last.end - outer..last.end);
        ensure_nonempty(&x_cells, "x", n_x)?;

        Ok(CoarseGrid {
            layout: CoarseLayout::BoundaryRefined,
            n_x,
            n_z,
            x_cells,
            z_cells,
        })
    }

    /// Equipartition into the same number of cells as the boundary-refined
    /// layout (`coarse_nz + 4` in x), for like-for-like comparisons.
    pub fn uniform(n_x: usize, n_z: usize, coarse_nz: usize) -> Result<Self, CoarseError> {
        let z_cells = floor_linspace(n_z, coarse_nz);
        ensure_nonempty(&z_cells, "z", n_z)?;
        let x_cells = floor_linspace(n_x, coarse_nz + 4);
        ensure_nonempty(&x_cells, "x", n_x)?;
        Ok(CoarseGrid {
            layout: CoarseLayout::Uniform,
            n_x,
            n_z,
            x_cells,
            z_cells,
        })
    }

    pub fn with_layout(
        layout: CoarseLayout,
        n_x: usize,
        n_z: usize,
        coarse_nz: usize,
    ) -> Result<Self, CoarseError> {
        match layout {
            CoarseLayout::BoundaryRefined => Self::boundary_refined(n_x, n_z, coarse_nz),
            CoarseLayout::Uniform => Self::uniform(n_x, n_z, coarse_nz),
        }
    }

    pub fn layout(&self) -> CoarseLayout {
        self.layout
    }

    pub fn n_x(&self) -> usize {
        self.n_x
    }

    pub fn n_z(&self) -> usize {
        self.n_z
    }

    pub fn coarse_nx(&self) -> usize {
        self.x_cells.len()
    }

    pub fn coarse_nz(&self) -> usize {
        self.z_cells.len()
    }

    /// Total number of cells `N`.
    pub fn len(&self) -> usize {
        self.x_cells.len() * self.z_cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn x_cells(&self) -> &[Range<usize>] {
        &self.x_cells
    }

    pub fn z_cells(&self) -> &[Range<usize>] {
        &self.z_cells
    }

    /// Column (x) and row (z) ranges of cell `k`.
    pub fn cell(&self, k: usize) -> (Range<usize>, Range<usize>) {
        let m = k / self.coarse_nz();
        let l = k % self.coarse_nz();
        (self.x_cells[m].clone(), self.z_cells[l].clone())
    }

    pub fn cell_point_count(&self, k: usize) -> usize {
        let (xs, zs) = self.cell(k);
        xs.len() * zs.len()
    }

    /// Mean of `m` over cell `k`, accumulated with pairwise summation so the
    /// result does not depend on traversal batching.
    pub fn cell_mean(&self, m: &CMatrix, k: usize) -> Complex64 {
        debug_assert_eq!(m.rows(), self.n_z);
        debug_assert_eq!(m.cols(), self.n_x);
        let (xs, zs) = self.cell(k);
        let col_sums: Vec<Complex64> = xs
            .clone()
            .map(|l| pairwise_sum(&m.col(l)[zs.clone()]))
            .collect();
        pairwise_sum(&col_sums) / (xs.len() * zs.len()) as f64
    }

    /// Means of `m` over every cell, indexed by cell id.
    pub fn cell_means(&self, m: &CMatrix) -> Vec<Complex64> {
        (0..self.len()).map(|k| self.cell_mean(m, k)).collect()
    }
}
