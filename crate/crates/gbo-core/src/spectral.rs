//! Periodic fields in Fourier space, multipliers and the linear group.

use alloc::vec::Vec;
use num_complex::Complex64;

use crate::error::{bail, Result};
use crate::fft::{Direction, FftProvider};
use crate::grid::SpatialGrid;
use crate::math::{cis, kahan_sum, powf, PI};
use crate::params::DispersionParams;

/// Dispersive symbol `ω(ξ) = ξ|ξ|^{1+a}`.
#[inline]
pub fn omega(params: &DispersionParams, xi: f64) -> f64 {
    xi * powf(xi.abs(), 1.0 + params.a)
}

/// `ω′(ξ) = (2+a)|ξ|^{1+a}`.
#[inline]
pub fn omega_prime(params: &DispersionParams, xi: f64) -> f64 {
    (2.0 + params.a) * powf(xi.abs(), 1.0 + params.a)
}

/// Fourier coefficients `f̂(ξ_k) ≈ ∫ e^{ixξ_k} f(x) dx` on a [`SpatialGrid`],
/// stored in transform order.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    pub grid: SpatialGrid,
    pub coeffs: Vec<Complex64>,
}

/// Coefficients from complex samples: `dx · Σ_m e^{i x_m ξ_k} f(x_m)`.
pub fn forward_samples(
    fft: &dyn FftProvider,
    grid: &SpatialGrid,
    samples: &mut [Complex64],
) -> Result<()> {
    let n = grid.len();
    if samples.len() != n {
        bail!(Config, "expected {n} samples, got {}", samples.len());
    }
    fft.process(samples, n, Direction::Inverse);
    let dx = grid.dx();
    let x0 = grid.origin();
    for (i, c) in samples.iter_mut().enumerate() {
        *c *= cis(grid.xi(i) * x0) * dx;
    }
    Ok(())
}

/// Samples from coefficients: `(1/L) Σ_k e^{−i x_m ξ_k} c_k`.
pub fn inverse_coeffs(
    fft: &dyn FftProvider,
    grid: &SpatialGrid,
    coeffs: &mut [Complex64],
) -> Result<()> {
    let n = grid.len();
    if coeffs.len() != n {
        bail!(Config, "expected {n} coefficients, got {}", coeffs.len());
    }
    let x0 = grid.origin();
    let inv_l = 1.0 / grid.length();
    for (i, c) in coeffs.iter_mut().enumerate() {
        *c *= cis(-grid.xi(i) * x0) * inv_l;
    }
    fft.process(coeffs, n, Direction::Forward);
    Ok(())
}

impl SpectralField {
    pub fn zeros(grid: SpatialGrid) -> Self {
        Self {
            grid,
            coeffs: alloc::vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn from_coeffs(grid: SpatialGrid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            bail!(
                Config,
                "expected {} coefficients, got {}",
                grid.len(),
                coeffs.len()
            );
        }
        Ok(Self { grid, coeffs })
    }

    /// Forward transform of real samples.
    pub fn from_samples(fft: &dyn FftProvider, grid: SpatialGrid, samples: &[f64]) -> Result<Self> {
        let mut buf: Vec<Complex64> = samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        forward_samples(fft, &grid, &mut buf)?;
        Ok(Self { grid, coeffs: buf })
    }

    pub fn from_complex_samples(
        fft: &dyn FftProvider,
        grid: SpatialGrid,
        samples: &[Complex64],
    ) -> Result<Self> {
        let mut buf = samples.to_vec();
        forward_samples(fft, &grid, &mut buf)?;
        Ok(Self { grid, coeffs: buf })
    }

    /// Forward transform of `f` sampled on the grid.
    pub fn from_fn(fft: &dyn FftProvider, grid: SpatialGrid, f: impl Fn(f64) -> f64) -> Self {
        let samples: Vec<f64> = grid.xs().into_iter().map(f).collect();
        Self::from_samples(fft, grid, &samples).expect("sample count matches grid")
    }

    pub fn to_complex_samples(&self, fft: &dyn FftProvider) -> Vec<Complex64> {
        let mut buf = self.coeffs.clone();
        inverse_coeffs(fft, &self.grid, &mut buf).expect("coefficient count matches grid");
        buf
    }

    /// Real part of the physical samples.
    pub fn to_real(&self, fft: &dyn FftProvider) -> Vec<f64> {
        self.to_complex_samples(fft)
            .into_iter()
            .map(|c| c.re)
            .collect()
    }

    pub fn max_imag(&self, fft: &dyn FftProvider) -> f64 {
        self.to_complex_samples(fft)
            .into_iter()
            .fold(0.0, |m, c| m.max(c.im.abs()))
    }

    pub fn xi(&self, i: usize) -> f64 {
        self.grid.xi(i)
    }

    /// Pointwise multiplication by a real symbol `m(ξ)`.
    ///
    /// The symbol is evaluated only where the coefficient is nonzero, so
    /// `D^{−s}` is usable on fields without a zero mode.
    pub fn apply_multiplier(&self, symbol: impl Fn(f64) -> f64) -> Result<Self> {
        self.apply_complex_multiplier(|xi| Complex64::new(symbol(xi), 0.0), false)
    }

    /// Pointwise multiplication by a complex symbol. With `odd = true` the
    /// Nyquist coefficient is zeroed so that real fields stay real.
    pub fn apply_complex_multiplier(
        &self,
        symbol: impl Fn(f64) -> Complex64,
        odd: bool,
    ) -> Result<Self> {
        let mut coeffs = self.coeffs.clone();
        let nyq = self.grid.nyquist_slot();
        for (i, c) in coeffs.iter_mut().enumerate() {
            if odd && i == nyq {
                *c = Complex64::new(0.0, 0.0);
                continue;
            }
            if *c == Complex64::new(0.0, 0.0) {
                continue;
            }
            let xi = self.grid.xi(i);
            let m = symbol(xi);
            if !(m.re.is_finite() && m.im.is_finite()) {
                bail!(NumericDomain, "symbol is not finite at xi = {xi}");
            }
            *c *= m;
        }
        Ok(Self {
            grid: self.grid,
            coeffs,
        })
    }

    /// `D^s`, the multiplier `|ξ|^s`.
    pub fn fractional_derivative(&self, s: f64) -> Result<Self> {
        self.apply_multiplier(|xi| if s == 0.0 { 1.0 } else { powf(xi.abs(), s) })
    }

    /// `∂x`, the multiplier `−iξ`.
    pub fn derivative(&self) -> Self {
        self.apply_complex_multiplier(|xi| Complex64::new(0.0, -xi), true)
            .expect("finite symbol")
    }

    /// Linear group `W(t)`: multiply by `e^{iω(ξ)t}`; Nyquist zeroed.
    pub fn propagate(&self, params: &DispersionParams, t: f64) -> Self {
        let mut out = self.clone();
        let nyq = self.grid.nyquist_slot();
        for (i, c) in out.coeffs.iter_mut().enumerate() {
            if i == nyq {
                *c = Complex64::new(0.0, 0.0);
            } else {
                *c *= cis(omega(params, self.grid.xi(i)) * t);
            }
        }
        out
    }

    /// `∫|f|² dx`, via discrete Parseval `(1/L) Σ|c_k|²`.
    pub fn l2_norm_sq(&self) -> f64 {
        kahan_sum(self.coeffs.iter().map(|c| c.norm_sqr())) / self.grid.length()
    }

    pub fn l2_norm(&self) -> f64 {
        crate::math::sqrt(self.l2_norm_sq())
    }

    /// `((1/2π) ∫ (1+|ξ|)^{2s} |f̂|² dξ)^{1/2}`.
    pub fn sobolev_norm(&self, s: f64) -> f64 {
        let w = self.grid.dxi() / (2.0 * PI);
        let sum = kahan_sum(
            self.coeffs
                .iter()
                .enumerate()
                .map(|(i, c)| powf(1.0 + self.grid.xi(i).abs(), 2.0 * s) * c.norm_sqr()),
        );
        crate::math::sqrt(sum * w)
    }

    /// Homogeneous `Ḣ^s` seminorm over nonzero modes.
    pub fn homogeneous_seminorm(&self, s: f64) -> f64 {
        let w = self.grid.dxi() / (2.0 * PI);
        let sum = kahan_sum(self.coeffs.iter().enumerate().filter_map(|(i, c)| {
            let xi = self.grid.xi(i);
            (xi != 0.0).then(|| powf(xi.abs(), 2.0 * s) * c.norm_sqr())
        }));
        crate::math::sqrt(sum * w)
    }

    /// Largest violation of `c(−ξ) = conj(c(ξ))`, Nyquist excluded.
    pub fn conjugate_asymmetry(&self) -> f64 {
        let n = self.grid.len();
        let mut worst: f64 = self.coeffs[0].im.abs();
        for i in 1..n / 2 {
            let d = (self.coeffs[i] - self.coeffs[n - i].conj()).norm();
            worst = worst.max(d);
        }
        worst
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.norm()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .fold(0.0, |m, (a, b)| m.max((a - b).norm()))
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self {
            grid: self.grid,
            coeffs: self.coeffs.iter().map(|c| c * k).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            grid: self.grid,
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            grid: self.grid,
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}
