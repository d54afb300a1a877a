use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::error::{bail, Result};
use crate::math::PI;

/// Uniform periodic grid of `n` samples over one period `length`.
///
/// Physical samples sit at `origin + m·dx`. Dual frequencies are
/// `2πk/length` for `k ∈ [−n/2, n/2)`, stored in transform order
/// `k = 0, 1, …, n/2−1, −n/2, …, −1`; storage index `n/2` is the Nyquist
/// mode. The same type describes the time axis of spacetime fields.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpatialGrid {
    n: usize,
    length: f64,
    origin: f64,
}

impl SpatialGrid {
    /// Grid centred on zero: samples cover `[−L/2, L/2)`.
    pub fn new(n: usize, length: f64) -> Result<Self> {
        Self::with_origin(n, length, -length / 2.0)
    }

    pub fn with_origin(n: usize, length: f64, origin: f64) -> Result<Self> {
        if n < 2 || n % 2 != 0 {
            bail!(Config, "grid size must be even and at least 2, got {n}");
        }
        if !(length.is_finite() && length > 0.0) || !origin.is_finite() {
            bail!(
                Config,
                "grid period must be finite and positive, got {length}"
            );
        }
        Ok(Self { n, length, origin })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn dx(&self) -> f64 {
        self.length / self.n as f64
    }

    /// Frequency spacing `2π/L`.
    pub fn dxi(&self) -> f64 {
        2.0 * PI / self.length
    }

    pub fn x(&self, m: usize) -> f64 {
        self.origin + m as f64 * self.dx()
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.n).map(|m| self.x(m)).collect()
    }

    /// Integer wavenumber `k` of storage slot `i`.
    pub fn wavenumber(&self, i: usize) -> i64 {
        let half = self.n / 2;
        if i < half {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    /// Storage slot of wavenumber `k`, if it lies on the grid.
    pub fn slot(&self, k: i64) -> Option<usize> {
        let half = (self.n / 2) as i64;
        if k < -half || k >= half {
            None
        } else if k >= 0 {
            Some(k as usize)
        } else {
            Some((k + self.n as i64) as usize)
        }
    }

    pub fn xi(&self, i: usize) -> f64 {
        self.wavenumber(i) as f64 * self.dxi()
    }

    pub fn xis(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.xi(i)).collect()
    }

    pub fn nyquist_slot(&self) -> usize {
        self.n / 2
    }

    /// Largest resolved `|ξ|` excluding the Nyquist mode.
    pub fn xi_max(&self) -> f64 {
        (self.n / 2 - 1) as f64 * self.dxi()
    }

    /// Grid with the same sample count and the period divided by `sigma`.
    pub fn dilated(&self, sigma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            bail!(
                Config,
                "dilation factor must be finite and positive, got {sigma}"
            );
        }
        Self::with_origin(self.n, self.length / sigma, self.origin / sigma)
    }
}
