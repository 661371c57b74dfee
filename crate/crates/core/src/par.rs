//! Data-parallel plumbing with a sequential fallback.
//!
//! With the default `parallel` feature the helpers fan work out over the
//! current rayon pool; without it they degrade to plain loops with identical
//! results. Every parallel task owns its own scratch state, and tasks never
//! share mutable data, so outputs are bitwise independent of the worker
//! count.

use num_complex::Complex64;

/// Below this element count the parallel helpers stay sequential; rayon
/// overhead dominates on tiny grids.
pub(crate) const PAR_MIN_ELEMS: usize = 1 << 15;

/// Runs `f` inside a rayon pool of `workers` threads (0 = library default).
///
/// Without the `parallel` feature, `f` simply runs on the calling thread and
/// `workers` is ignored.
#[cfg(feature = "parallel")]
pub fn with_workers<R: Send>(workers: usize, f: impl FnOnce() -> R + Send) -> R {
    if workers == 0 {
        f()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .expect("failed to build worker pool")
            .install(f)
    }
}

#[cfg(not(feature = "parallel"))]
pub fn with_workers<R: Send>(_workers: usize, f: impl FnOnce() -> R + Send) -> R {
    f()
}

/// Number of threads the helpers would use right now.
pub fn current_workers() -> usize {
    #[cfg(feature = "parallel")]
    {
        rayon::current_num_threads()
    }
    #[cfg(not(feature = "parallel"))]
    {
        1
    }
}

/// Applies `f` to groups of whole `col_len`-columns covering `data`.
///
/// `f` must handle a slice containing any number of complete columns; it is
/// called once on the full slice in the sequential path and once per chunk in
/// the parallel path, with a fresh `make_state()` each time.
#[cfg(feature = "parallel")]
pub(crate) fn column_chunks<S, M, F>(data: &mut [Complex64], col_len: usize, make_state: M, f: F)
where
    S: Send,
    M: Fn() -> S + Send + Sync,
    F: Fn(&mut [Complex64], &mut S) + Send + Sync,
{
    use rayon::prelude::*;

    debug_assert_eq!(data.len() % col_len, 0);
    let cols = data.len() / col_len;
    let threads = rayon::current_num_threads();
    if threads <= 1 || cols <= 1 || data.len() < PAR_MIN_ELEMS {
        let mut state = make_state();
        f(data, &mut state);
        return;
    }
    let chunk_cols = cols.div_ceil(threads * 4).max(1);
    data.par_chunks_mut(chunk_cols * col_len)
        .for_each_init(&make_state, |state, chunk| f(chunk, state));
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn column_chunks<S, M, F>(data: &mut [Complex64], col_len: usize, make_state: M, f: F)
where
    S: Send,
    M: Fn() -> S + Send + Sync,
    F: Fn(&mut [Complex64], &mut S) + Send + Sync,
{
    debug_assert_eq!(data.len() % col_len, 0);
    let mut state = make_state();
    f(data, &mut state);
}

/// Runs `f(index, column, state)` for every `col_len`-column of `data`, in
/// parallel when available. Columns are disjoint, so scheduling cannot change
/// any result.
#[cfg(feature = "parallel")]
pub(crate) fn indexed_columns<S, M, F>(data: &mut [Complex64], col_len: usize, make_state: M, f: F)
where
    S: Send,
    M: Fn() -> S + Send + Sync,
    F: Fn(usize, &mut [Complex64], &mut S) + Send + Sync,
{
    use rayon::prelude::*;

    debug_assert_eq!(data.len() % col_len, 0);
    if rayon::current_num_threads() <= 1 {
        sequential_indexed_columns(data, col_len, make_state, f);
        return;
    }
    data.par_chunks_mut(col_len)
        .enumerate()
        .for_each_init(&make_state, |state, (k, col)| f(k, col, state));
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn indexed_columns<S, M, F>(data: &mut [Complex64], col_len: usize, make_state: M, f: F)
where
    S: Send,
    M: Fn() -> S + Send + Sync,
    F: Fn(usize, &mut [Complex64], &mut S) + Send + Sync,
{
    sequential_indexed_columns(data, col_len, make_state, f);
}

/// Sequential twin of [`indexed_columns`]; also used directly by benchmarks
/// to compare the two execution modes.
pub(crate) fn sequential_indexed_columns<S, M, F>(
    data: &mut [Complex64],
    col_len: usize,
    make_state: M,
    f: F,
) where
    M: Fn() -> S,
    F: Fn(usize, &mut [Complex64], &mut S),
{
    debug_assert_eq!(data.len() % col_len, 0);
    let mut state = make_state();
    for (k, col) in data.chunks_mut(col_len).enumerate() {
        f(k, col, &mut state);
    }
}
