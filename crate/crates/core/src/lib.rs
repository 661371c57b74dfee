//! Matrix-free solver for the waveguide nonlinear eigenvalue problem.
//!
//! A lossless waveguide on an infinite strip, truncated with
//! Dirichlet-to-Neumann maps, leads to a nonlinear eigenvalue problem
//! `M(gamma) v = 0` whose discretisation couples a second-order interior
//! stencil with dense-but-diagonalisable boundary operators. This crate
//! implements the full solution pipeline without ever assembling a matrix:
//!
//! * [`spectral`] — FFT/DST fast-diagonalization kernels for circulant and
//!   Dirichlet stencils, combined into an `O(n log n)` Sylvester solver;
//! * [`geometry`] / [`problem`] — piecewise-constant waveguide media and
//!   their finite-difference sampling;
//! * [`dtn`] / [`operator`] — the Fourier-diagonal boundary maps and the
//!   actions of `M(gamma)` and `M'(gamma)`;
//! * [`schur`] — the interior Schur complement `S(sigma)` in matrix-equation
//!   form (Sylvester part plus low-rank and Hadamard corrections);
//! * [`coarse`] / [`smw`] — a Galerkin coarse space and the
//!   Sherman-Morrison-Woodbury preconditioner built from one Sylvester solve
//!   per coarse cell;
//! * [`krylov`] — right-preconditioned GMRES and BiCGStab;
//! * [`resinv`] — residual inverse iteration with Rayleigh-quotient Newton
//!   updates for the eigenvalue.
//!
//! The expensive precompute (one Sylvester solve per coarse basis function)
//! is embarrassingly parallel and runs on a rayon pool when the default
//! `parallel` feature is enabled; results are identical for any worker count.

pub mod cache;
pub mod coarse;
pub mod dtn;
pub mod geometry;
pub mod krylov;
pub mod linalg;
pub mod matrix;
pub mod operator;
pub mod problem;
pub mod par;
pub mod resinv;
pub mod schur;
pub mod smw;
pub mod spectral;
pub mod transforms;

/// Largest interior unknown count (`n_x * n_z`) a desk-scale scaling run
/// will accept. The published large-scale rows (2.5M unknowns and beyond)
/// are hardware- and RAM-bound and deliberately out of scope; the scaling
/// harness refuses them instead of producing misleading timings.
pub const DESK_SCALE_UNKNOWN_CAP: usize = 2_500_000;

pub use coarse::{CoarseGrid, CoarseLayout};
pub use geometry::{Region, WaveguideGeometry};
pub use matrix::{CMatrix, Matrix};
pub use par::with_workers;
pub use problem::{DiscreteProblem, KBarMode};
pub use resinv::{resinv, EigResult, InnerPolicy, InnerSolver, ResinvOptions};
pub use schur::SchurAction;
pub use smw::SmwPreconditioner;
pub use spectral::{
    CirculantSpectrum, SineSpectrum, SpectralError, SylvesterKernel, SylvesterWorkspace,
};
