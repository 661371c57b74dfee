//! Kernel benchmarks: Sylvester-solve scaling, preconditioner precompute and
//! application, each compared across rayon pool widths.
//!
//! The parallel/sequential comparison pins the pool with [`with_workers`]
//! (1 thread versus the library default), so a single binary measures both
//! execution modes; built without the `parallel` feature every arm runs the
//! same sequential code and the comparison degenerates to a no-op check.

use std::hint::black_box;
use std::time::Duration;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wep_core::{
    with_workers, CMatrix, CoarseGrid, DiscreteProblem, KBarMode, Region, SchurAction,
    SmwPreconditioner, WaveguideGeometry,
};

fn geometry() -> WaveguideGeometry {
    WaveguideGeometry {
        x_minus: -1.0,
        x_plus: 1.0,
        background_kappa_sq: 2.0 * std::f64::consts::PI.powi(2),
        regions: vec![Region {
            x_min: -0.4,
            x_max: 0.4,
            z_min: 0.3,
            z_max: 0.7,
            kappa_sq: 8.0 * std::f64::consts::PI.powi(2),
        }],
        kappa_minus: std::f64::consts::SQRT_2 * std::f64::consts::PI,
        kappa_plus: std::f64::consts::SQRT_2 * std::f64::consts::PI,
    }
}

fn problem(n_z: usize) -> DiscreteProblem {
    DiscreteProblem::new(geometry(), n_z + 4, n_z, KBarMode::MeanK).unwrap()
}

fn random_matrix(seed: u64, rows: usize, cols: usize) -> CMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    CMatrix::from_fn(rows, cols, |_, _| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    })
}

/// Pool widths compared by the mode benchmarks: a single worker (the
/// sequential fallback path) against the library default.
const MODES: [(&str, usize); 2] = [("seq", 1), ("par", 0)];

/// Fast-diagonalization Sylvester solve across grid sizes. Sizes are odd and
/// FFT-smooth in both transform lengths (`n_z` and `n_z + 5`) so the timings
/// track the `O(n log n)` kernel rather than planner differences.
fn sylvester_solve(c: &mut Criterion) {
    let sigma = Complex64::new(-0.45, -2.1);
    let mut group = c.benchmark_group("sylvester_solve");
    group
        .sample_size(10)
        .warm_up_time(Duration::from_millis(500))
        .measurement_time(Duration::from_secs(2));
    for n_z in [105usize, 315, 625] {
        let prob = problem(n_z);
        let schur = SchurAction::new(&prob, sigma).unwrap();
        let rhs = random_matrix(1, prob.n_z(), prob.n_x());
        group.throughput(Throughput::Elements(prob.interior_len() as u64));
        group.bench_with_input(BenchmarkId::from_parameter(n_z), &rhs, |b, rhs| {
            b.iter(|| black_box(schur.kernel().solve(rhs)))
        });
    }
    group.finish();
}

/// Preconditioner precompute (one Sylvester solve per coarse cell), the
/// embarrassingly parallel phase the `parallel` feature targets.
fn smw_build(c: &mut Criterion) {
    let sigma = Complex64::new(-0.45, -2.1);
    let prob = problem(315);
    let schur = SchurAction::new(&prob, sigma).unwrap();
    let mut group = c.benchmark_group("smw_build");
    group
        .sample_size(10)
        .warm_up_time(Duration::from_millis(500))
        .measurement_time(Duration::from_secs(5));
    for (label, workers) in MODES {
        group.bench_function(BenchmarkId::new("coarse_nz_7", label), |b| {
            b.iter(|| {
                let grid = CoarseGrid::boundary_refined(prob.n_x(), prob.n_z(), 7).unwrap();
                with_workers(workers, || {
                    black_box(SmwPreconditioner::build(&schur, grid).unwrap())
                })
            })
        });
    }
    group.finish();
}

/// Preconditioner application: two Sylvester solves plus the dense coarse
/// correction. The batched column transforms inside the solves are the
/// parallel surface here.
fn smw_apply(c: &mut Criterion) {
    let sigma = Complex64::new(-0.45, -2.1);
    let prob = problem(315);
    let schur = SchurAction::new(&prob, sigma).unwrap();
    let grid = CoarseGrid::boundary_refined(prob.n_x(), prob.n_z(), 7).unwrap();
    let smw = SmwPreconditioner::build(&schur, grid).unwrap();
    let rhs = random_matrix(2, prob.n_z(), prob.n_x());
    let mut group = c.benchmark_group("smw_apply");
    group
        .sample_size(20)
        .warm_up_time(Duration::from_millis(500))
        .measurement_time(Duration::from_secs(3));
    group.throughput(Throughput::Elements(prob.interior_len() as u64));
    for (label, workers) in MODES {
        group.bench_function(BenchmarkId::new("n_z_315", label), |b| {
            b.iter(|| with_workers(workers, || black_box(smw.apply_matrix(&rhs))))
        });
    }
    group.finish();
}

criterion_group!(benches, sylvester_solve, smw_build, smw_apply);
criterion_main!(benches);
