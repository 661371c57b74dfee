//! Piecewise-constant waveguide media.
//!
//! The waveguide occupies the strip `[x_minus, x_plus] x [0, 1]` (periodic in
//! z) with two half-infinite exterior leads. The squared wavenumber
//! `kappa^2(x, z)` is a background constant overlaid by axis-aligned
//! rectangles; outside the strip it equals `kappa_minus^2` (left) and
//! `kappa_plus^2` (right).

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("invalid domain: x_minus = {x_minus} must be strictly less than x_plus = {x_plus}")]
    InvalidDomain { x_minus: f64, x_plus: f64 },
    #[error("exterior wavenumber kappa_{side} = {value} must be positive and finite")]
    InvalidExteriorWavenumber { side: &'static str, value: f64 },
    #[error("background kappa^2 = {value} must be nonnegative and finite")]
    InvalidBackground { value: f64 },
    #[error("region {index}: {reason}")]
    InvalidRegion { index: usize, reason: String },
}

/// Axis-aligned rectangle `[x_min, x_max] x [z_min, z_max]` carrying a
/// constant squared wavenumber. Bounds are inclusive; where rectangles
/// overlap, the last-listed region wins.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    pub x_min: f64,
    pub x_max: f64,
    pub z_min: f64,
    pub z_max: f64,
    pub kappa_sq: f64,
}

impl Region {
    pub fn contains(&self, x: f64, z: f64) -> bool {
        x >= self.x_min && x <= self.x_max && z >= self.z_min && z <= self.z_max
    }
}

/// Full description of the medium: strip bounds, background, overlay regions
/// and the two exterior wavenumbers.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveguideGeometry {
    pub x_minus: f64,
    pub x_plus: f64,
    /// Squared wavenumber outside every region.
    pub background_kappa_sq: f64,
    pub regions: Vec<Region>,
    /// Exterior wavenumber for `x <= x_minus` (not squared).
    pub kappa_minus: f64,
    /// Exterior wavenumber for `x >= x_plus` (not squared).
    pub kappa_plus: f64,
}

impl WaveguideGeometry {
    pub fn validate(&self) -> Result<(), GeometryError> {
        if !(self.x_minus < self.x_plus) || !self.x_minus.is_finite() || !self.x_plus.is_finite() {
            return Err(GeometryError::InvalidDomain {
                x_minus: self.x_minus,
                x_plus: self.x_plus,
            });
        }
        for (side, value) in [("minus", self.kappa_minus), ("plus", self.kappa_plus)] {
            if !(value > 0.0) || !value.is_finite() {
                return Err(GeometryError::InvalidExteriorWavenumber { side, value });
            }
        }
        if !(self.background_kappa_sq >= 0.0) || !self.background_kappa_sq.is_finite() {
            return Err(GeometryError::InvalidBackground {
                value: self.background_kappa_sq,
            });
        }
        for (index, r) in self.regions.iter().enumerate() {
            if !(r.x_min < r.x_max) || !(r.z_min < r.z_max) {
                return Err(GeometryError::InvalidRegion {
                    index,
                    reason: format!(
                        "empty rectangle [{}, {}] x [{}, {}]",
                        r.x_min, r.x_max, r.z_min, r.z_max
                    ),
                });
            }
            if r.x_min < self.x_minus || r.x_max > self.x_plus || r.z_min < 0.0 || r.z_max > 1.0 {
                return Err(GeometryError::InvalidRegion {
                    index,
                    reason: "rectangle extends outside the waveguide strip".into(),
                });
            }
            if !(r.kappa_sq >= 0.0) || !r.kappa_sq.is_finite() {
                return Err(GeometryError::InvalidRegion {
                    index,
                    reason: format!("kappa^2 = {} must be nonnegative and finite", r.kappa_sq),
                });
            }
        }
        Ok(())
    }

    /// Squared wavenumber at an interior point; the last listed region
    /// containing the point wins, otherwise the background value applies.
    pub fn kappa_sq_at(&self, x: f64, z: f64) -> f64 {
        self.regions
            .iter()
            .rev()
            .find(|r| r.contains(x, z))
            .map(|r| r.kappa_sq)
            .unwrap_or(self.background_kappa_sq)
    }

    /// FNV-1a hash of the full medium description; used to tie cached
    /// coupling matrices to the geometry they were computed for.
    pub fn content_hash(&self) -> u64 {
        let mut h = Fnv1a::new();
        for v in [
            self.x_minus,
            self.x_plus,
            self.background_kappa_sq,
            self.kappa_minus,
            self.kappa_plus,
        ] {
            h.write_f64(v);
        }
        h.write_u64(self.regions.len() as u64);
        for r in &self.regions {
            for v in [r.x_min, r.x_max, r.z_min, r.z_max, r.kappa_sq] {
                h.write_f64(v);
            }
        }
        h.finish()
    }
}

/// Minimal 64-bit FNV-1a accumulator (also used for the cache checksum).
#[derive(Debug, Clone)]
pub(crate) struct Fnv1a(u64);

impl Fnv1a {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;

    pub fn new() -> Self {
        Fnv1a(Self::OFFSET)
    }

    pub fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 ^= b as u64;
            self.0 = self.0.wrapping_mul(Self::PRIME);
        }
    }

    pub fn write_f64(&mut self, v: f64) {
        self.write(&v.to_le_bytes());
    }

    pub fn write_u64(&mut self, v: u64) {
        self.write(&v.to_le_bytes());
    }

    pub fn finish(&self) -> u64 {
        self.0
    }
}
