//! Shared FFT plans and the type-I discrete sine transform.
//!
//! All fast transforms in the crate go through this module so that plans are
//! created once per (length, direction) and reused everywhere, including
//! across threads: `rustfft` plan handles are `Send + Sync`, and every call
//! site owns its own scratch buffer.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

type PlanKey = (usize, bool);
type PlanMap = HashMap<PlanKey, Arc<dyn Fft<f64>>>;

static PLAN_CACHE: OnceLock<Mutex<PlanMap>> = OnceLock::new();

/// Returns the process-wide cached plan for `len` in the given direction.
pub fn plan(len: usize, direction: FftDirection) -> Arc<dyn Fft<f64>> {
    let cache = PLAN_CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let key = (len, matches!(direction, FftDirection::Forward));
    let mut map = cache.lock().expect("FFT plan cache poisoned");
    if let Some(p) = map.get(&key) {
        return Arc::clone(p);
    }
    let p = FftPlanner::new().plan_fft(len, direction);
    map.insert(key, Arc::clone(&p));
    p
}

/// Forward/inverse FFT pair of a fixed length.
///
/// Conventions (unnormalised, as in `rustfft`):
/// forward `X[m] = sum_j x[j] e^{-2 pi i j m / n}`, inverse the conjugate sum,
/// so `inverse(forward(x)) = n * x`.
#[derive(Clone)]
pub struct Dft {
    len: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Dft {
    pub fn new(len: usize) -> Self {
        Dft {
            len,
            fwd: plan(len, FftDirection::Forward),
            inv: plan(len, FftDirection::Inverse),
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    /// Scratch capacity sufficient for both directions.
    pub fn scratch_len(&self) -> usize {
        self.fwd
            .get_inplace_scratch_len()
            .max(self.inv.get_inplace_scratch_len())
    }

    /// In-place forward transform of each contiguous `len`-chunk of `data`.
    pub fn forward(&self, data: &mut [Complex64], scratch: &mut Vec<Complex64>) {
        debug_assert_eq!(data.len() % self.len, 0);
        scratch.resize(self.fwd.get_inplace_scratch_len(), Complex64::default());
        self.fwd.process_with_scratch(data, scratch);
    }

    /// In-place (unnormalised) inverse transform of each `len`-chunk.
    pub fn inverse(&self, data: &mut [Complex64], scratch: &mut Vec<Complex64>) {
        debug_assert_eq!(data.len() % self.len, 0);
        scratch.resize(self.inv.get_inplace_scratch_len(), Complex64::default());
        self.inv.process_with_scratch(data, scratch);
    }
}

impl std::fmt::Debug for Dft {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Dft").field("len", &self.len).finish()
    }
}

/// Type-I discrete sine transform of length `n`, realised as a forward FFT of
/// the odd extension of length `2(n + 1)`.
///
/// `apply` computes `y[q] = sum_{j=1..n} x_j sin(j (q+1) pi / (n+1))` for
/// `q = 0..n-1` (the plain sine-basis product, no normalisation), which makes
/// the transform involutive up to the constant `(n + 1) / 2`.
#[derive(Clone, Debug)]
pub struct DstI {
    n: usize,
    ext: Dft,
}

/// Per-caller workspace for [`DstI`]; reuse it across calls, one per thread.
#[derive(Clone, Debug, Default)]
pub struct DstWork {
    ext: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl DstI {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "DST-I needs length >= 1");
        DstI {
            n,
            ext: Dft::new(2 * (n + 1)),
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    /// Transforms a contiguous slice of length `n` in place.
    pub fn apply(&self, x: &mut [Complex64], work: &mut DstWork) {
        debug_assert_eq!(x.len(), self.n);
        self.apply_strided(x, 0, 1, work);
    }

    /// Transforms the `n` elements `data[offset + j * stride]` in place.
    ///
    /// Strided access lets the Sylvester kernel run row transforms directly on
    /// column-major storage without materialising row copies.
    pub fn apply_strided(
        &self,
        data: &mut [Complex64],
        offset: usize,
        stride: usize,
        work: &mut DstWork,
    ) {
        let n = self.n;
        let m = 2 * (n + 1);
        work.ext.resize(m, Complex64::default());
        let ext = &mut work.ext;
        ext[0] = Complex64::default();
        ext[n + 1] = Complex64::default();
        for j in 1..=n {
            let v = data[offset + (j - 1) * stride];
            ext[j] = v;
            ext[m - j] = -v;
        }
        self.ext.forward(ext, &mut work.scratch);
        // FFT of the odd extension carries -2i times the sine sum in bins 1..n.
        let half_i = Complex64::new(0.0, 0.5);
        for q in 1..=n {
            data[offset + (q - 1) * stride] = half_i * ext[q];
        }
    }
}
