//! On-disk cache for the Woodbury coupling matrix.
//!
//! Building the preconditioner costs one Sylvester solve per coarse cell;
//! everything else about it is cheap to recompute. The cache therefore
//! stores only the coupling matrix `W`, keyed by every input that
//! determines it: grid sizes, coarse layout, shift, Sylvester shift and a
//! content hash of the geometry. Loading re-runs the (deterministic) LU
//! factorization, so a cache hit reproduces a fresh build bit for bit.
//!
//! Layout (all little-endian):
//!
//! ```text
//! magic[8] version[1] layout[1]
//! n_x n_z coarse_nx coarse_nz          (u64 each)
//! sigma_re sigma_im k_bar              (f64 each)
//! geometry_hash                        (u64)
//! W column-major, re/im f64 pairs      (16 * N^2 bytes)
//! fnv1a checksum of everything above   (u64)
//! ```

use std::path::Path;

use num_complex::Complex64;
use thiserror::Error;

use crate::coarse::{CoarseGrid, CoarseLayout};
use crate::geometry::Fnv1a;
use crate::matrix::CMatrix;
use crate::schur::SchurAction;
use crate::smw::{SmwError, SmwPreconditioner};

pub const CACHE_MAGIC: [u8; 8] = *b"WEPSMWC\0";
pub const CACHE_VERSION: u8 = 1;

#[derive(Debug, Error)]
pub enum CacheError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("not a coupling-cache file (bad magic)")]
    BadMagic,
    #[error("unsupported cache version {found} (this build reads version {CACHE_VERSION})")]
    UnsupportedVersion { found: u8 },
    #[error("unknown coarse-layout tag {0}")]
    BadLayout(u8),
    #[error("cache file is truncated or has trailing bytes")]
    Truncated,
    #[error("checksum mismatch: stored {stored:#018x}, computed {computed:#018x}")]
    ChecksumMismatch { stored: u64, computed: u64 },
    #[error("cache was built for a different problem: {field} is {found}, expected {expected}")]
    KeyMismatch {
        field: &'static str,
        found: String,
        expected: String,
    },
}

/// Everything that determines the coupling matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CacheKey {
    pub n_x: usize,
    pub n_z: usize,
    pub layout: CoarseLayout,
    pub coarse_nx: usize,
    pub coarse_nz: usize,
    pub sigma: Complex64,
    pub k_bar: f64,
    pub geometry_hash: u64,
}

impl CacheKey {
    pub fn for_preconditioner(schur: &SchurAction<'_>, grid: &CoarseGrid) -> Self {
        let prob = schur.problem();
        CacheKey {
            n_x: prob.n_x(),
            n_z: prob.n_z(),
            layout: grid.layout(),
            coarse_nx: grid.coarse_nx(),
            coarse_nz: grid.coarse_nz(),
            sigma: schur.sigma(),
            k_bar: schur.k_bar(),
            geometry_hash: prob.geometry().content_hash(),
        }
    }

    /// Number of coarse cells `N`.
    pub fn coarse_len(&self) -> usize {
        self.coarse_nx * self.coarse_nz
    }
}

/// Serializes `key` and `coupling` to `path`.
pub fn save(path: &Path, key: &CacheKey, coupling: &CMatrix) -> Result<(), CacheError> {
    let n = key.coarse_len();
    assert_eq!(coupling.rows(), n);
    assert_eq!(coupling.cols(), n);
    let mut buf = Vec::with_capacity(8 + 2 + 4 * 8 + 3 * 8 + 8 + 16 * n * n + 8);
    buf.extend_from_slice(&CACHE_MAGIC);
    buf.push(CACHE_VERSION);
    buf.push(key.layout.tag());
    for v in [key.n_x, key.n_z, key.coarse_nx, key.coarse_nz] {
        buf.extend_from_slice(&(v as u64).to_le_bytes());
    }
    for v in [key.sigma.re, key.sigma.im, key.k_bar] {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    buf.extend_from_slice(&key.geometry_hash.to_le_bytes());
    for z in coupling.as_slice() {
        buf.extend_from_slice(&z.re.to_le_bytes());
        buf.extend_from_slice(&z.im.to_le_bytes());
    }
    let mut h = Fnv1a::new();
    h.write(&buf);
    buf.extend_from_slice(&h.finish().to_le_bytes());
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(path, buf)?;
    Ok(())
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CacheError> {
        let end = self.pos.checked_add(n).ok_or(CacheError::Truncated)?;
        if end > self.buf.len() {
            return Err(CacheError::Truncated);
        }
        let out = &self.buf[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8, CacheError> {
        Ok(self.take(1)?[0])
    }

    fn u64(&mut self) -> Result<u64, CacheError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64, CacheError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

/// Parses and verifies a cache file, returning its key and coupling matrix.
pub fn read(path: &Path) -> Result<(CacheKey, CMatrix), CacheError> {
    let buf = std::fs::read(path)?;
    let mut r = Reader { buf: &buf, pos: 0 };
    if r.take(8)? != CACHE_MAGIC {
        return Err(CacheError::BadMagic);
    }
    let version = r.u8()?;
    if version != CACHE_VERSION {
        return Err(CacheError::UnsupportedVersion { found: version });
    }
    let layout_tag = r.u8()?;
    let layout = CoarseLayout::from_tag(layout_tag).ok_or(CacheError::BadLayout(layout_tag))?;
    let n_x = r.u64()? as usize;
    let n_z = r.u64()? as usize;
    let coarse_nx = r.u64()? as usize;
    let coarse_nz = r.u64()? as usize;
    let sigma = Complex64::new(r.f64()?, r.f64()?);
    let k_bar = r.f64()?;
    let geometry_hash = r.u64()?;
    let key = CacheKey {
        n_x,
        n_z,
        layout,
        coarse_nx,
        coarse_nz,
        sigma,
        k_bar,
        geometry_hash,
    };

    let n = key.coarse_len();
    let payload = 16usize
        .checked_mul(n.checked_mul(n).ok_or(CacheError::Truncated)?)
        .ok_or(CacheError::Truncated)?;
    if buf.len() != r.pos + payload + 8 {
        return Err(CacheError::Truncated);
    }
    let mut h = Fnv1a::new();
    h.write(&buf[..buf.len() - 8]);
    let computed = h.finish();
    let stored = u64::from_le_bytes(buf[buf.len() - 8..].try_into().unwrap());
    if stored != computed {
        return Err(CacheError::ChecksumMismatch { stored, computed });
    }

    let mut data = Vec::with_capacity(n * n);
    for _ in 0..n * n {
        let re = r.f64()?;
        let im = r.f64()?;
        data.push(Complex64::new(re, im));
    }
    Ok((key, CMatrix::from_vec(n, n, data)))
}

fn mismatch(field: &'static str, found: impl ToString, expected: impl ToString) -> CacheError {
    CacheError::KeyMismatch {
        field,
        found: found.to_string(),
        expected: expected.to_string(),
    }
}

/// Loads the coupling matrix for exactly `key`; any key difference is an
/// error (numeric fields are compared bitwise).
pub fn load(path: &Path, key: &CacheKey) -> Result<CMatrix, CacheError> {
    let (stored, coupling) = read(path)?;
    if stored.n_x != key.n_x {
        return Err(mismatch("n_x", stored.n_x, key.n_x));
    }
    if stored.n_z != key.n_z {
        return Err(mismatch("n_z", stored.n_z, key.n_z));
    }
    if stored.layout != key.layout {
        return Err(mismatch("layout", stored.layout, key.layout));
    }
    if stored.coarse_nx != key.coarse_nx {
        return Err(mismatch("coarse_nx", stored.coarse_nx, key.coarse_nx));
    }
    if stored.coarse_nz != key.coarse_nz {
        return Err(mismatch("coarse_nz", stored.coarse_nz, key.coarse_nz));
    }
    if stored.sigma.re.to_bits() != key.sigma.re.to_bits()
        || stored.sigma.im.to_bits() != key.sigma.im.to_bits()
    {
        return Err(mismatch("sigma", stored.sigma, key.sigma));
    }
    if stored.k_bar.to_bits() != key.k_bar.to_bits() {
        return Err(mismatch("k_bar", stored.k_bar, key.k_bar));
    }
    if stored.geometry_hash != key.geometry_hash {
        return Err(mismatch(
            "geometry_hash",
            format!("{:#018x}", stored.geometry_hash),
            format!("{:#018x}", key.geometry_hash),
        ));
    }
    Ok(coupling)
}

/// How [`load_or_build`] obtained its preconditioner.
#[derive(Debug, Default)]
pub struct CacheUse {
    pub loaded: bool,
    /// Why the cache was not usable (absent for a plain missing file).
    pub load_note: Option<String>,
    /// Why the rebuilt coupling could not be saved.
    pub save_note: Option<String>,
}

/// Uses `path` as a read-through cache for the preconditioner's coupling
/// matrix: load it when the key matches, otherwise build and try to save.
/// Cache problems never fail the build; they are reported in [`CacheUse`].
pub fn load_or_build<'a>(
    path: &Path,
    schur: &'a SchurAction<'a>,
    grid: CoarseGrid,
) -> Result<(SmwPreconditioner<'a>, CacheUse), SmwError> {
    let key = CacheKey::for_preconditioner(schur, &grid);
    match load(path, &key) {
        Ok(coupling) => {
            let smw = SmwPreconditioner::from_coupling(schur, grid, coupling)?;
            Ok((
                smw,
                CacheUse {
                    loaded: true,
                    ..CacheUse::default()
                },
            ))
        }
        Err(err) => {
            let load_note = match &err {
                CacheError::Io(io) if io.kind() == std::io::ErrorKind::NotFound => None,
                other => Some(other.to_string()),
            };
            let smw = SmwPreconditioner::build(schur, grid)?;
            let save_note = save(path, &key, smw.coupling()).err().map(|e| e.to_string());
            Ok((
                smw,
                CacheUse {
                    loaded: false,
                    load_note,
                    save_note,
                },
            ))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Region, WaveguideGeometry};
    use crate::problem::{DiscreteProblem, KBarMode};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn test_key() -> CacheKey {
        CacheKey {
            n_x: 13,
            n_z: 9,
            layout: CoarseLayout::BoundaryRefined,
            coarse_nx: 7,
            coarse_nz: 3,
            sigma: c(-0.5, -0.4),
            k_bar: 5.2,
            geometry_hash: 0xdead_beef_cafe_f00d,
        }
    }

    fn test_coupling(n: usize) -> CMatrix {
        CMatrix::from_fn(n, n, |i, j| {
            c(
                (i * n + j) as f64 * 0.01 - 1.0,
                ((i + 3 * j) as f64 * 0.37).sin(),
            )
        })
    }

    #[test]
    fn roundtrip_preserves_key_and_coupling_bits() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("w.bin");
        let key = test_key();
        let w = test_coupling(key.coarse_len());
        save(&path, &key, &w).unwrap();

        let (stored, loaded) = read(&path).unwrap();
        assert_eq!(stored, key);
        for (a, b) in loaded.as_slice().iter().zip(w.as_slice()) {
            assert_eq!(a.re.to_bits(), b.re.to_bits());
            assert_eq!(a.im.to_bits(), b.im.to_bits());
        }
        assert!(load(&path, &key).is_ok());
    }

    #[test]
    fn key_differences_are_rejected_per_field() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("w.bin");
        let key = test_key();
        save(&path, &key, &test_coupling(key.coarse_len())).unwrap();

        let mut other = key.clone();
        other.sigma = c(-0.5, -0.41);
        assert!(matches!(
            load(&path, &other),
            Err(CacheError::KeyMismatch { field: "sigma", .. })
        ));
        let mut other = key.clone();
        other.geometry_hash ^= 1;
        assert!(matches!(
            load(&path, &other),
            Err(CacheError::KeyMismatch { field: "geometry_hash", .. })
        ));
    }

    #[test]
    fn corruption_is_detected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("w.bin");
        let key = test_key();
        save(&path, &key, &test_coupling(key.coarse_len())).unwrap();

        let mut bytes = std::fs::read(&path).unwrap();
        let mid = bytes.len() / 2;
        bytes[mid] ^= 0x40;
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(
            read(&path),
            Err(CacheError::ChecksumMismatch { .. })
        ));

        let truncated = &bytes[..bytes.len() - 3];
        std::fs::write(&path, truncated).unwrap();
        assert!(matches!(read(&path), Err(CacheError::Truncated)));

        std::fs::write(&path, b"not a cache").unwrap();
        assert!(matches!(read(&path), Err(CacheError::BadMagic)));
    }

    #[test]
    fn load_or_build_round_trips_through_the_file() {
        let geometry = WaveguideGeometry {
            x_minus: -1.0,
            x_plus: 1.0,
            background_kappa_sq: 4.0,
            regions: vec![Region {
                x_min: -0.4,
                x_max: 0.4,
                z_min: 0.3,
                z_max: 0.7,
                kappa_sq: 9.0,
            }],
            kappa_minus: 1.3,
            kappa_plus: 2.1,
        };
        let prob = DiscreteProblem::new(geometry, 13, 9, KBarMode::MeanK).unwrap();
        let schur = SchurAction::new(&prob, c(-0.5, -0.4)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("coupling.bin");

        let grid = || CoarseGrid::boundary_refined(13, 9, 3).unwrap();
        let (first, use1) = load_or_build(&path, &schur, grid()).unwrap();
        assert!(!use1.loaded);
        assert!(use1.load_note.is_none(), "{:?}", use1.load_note);
        assert!(use1.save_note.is_none(), "{:?}", use1.save_note);

        let (second, use2) = load_or_build(&path, &schur, grid()).unwrap();
        assert!(use2.loaded);
        for (a, b) in first
            .coupling()
            .as_slice()
            .iter()
            .zip(second.coupling().as_slice())
        {
            assert_eq!(a.re.to_bits(), b.re.to_bits());
            assert_eq!(a.im.to_bits(), b.im.to_bits());
        }

        // A different shift must miss and rebuild rather than reuse.
        let other = SchurAction::new(&prob, c(-0.6, -0.4)).unwrap();
        let (_, use3) = load_or_build(&path, &other, grid()).unwrap();
        assert!(!use3.loaded);
        assert!(use3.load_note.unwrap().contains("sigma"));
    }
}
