//! Fields on a periodic `(x, t)` box and their `(ξ, λ)` coefficients.

use alloc::vec::Vec;
use num_complex::Complex64;

use crate::error::{bail, Result};
use crate::fft::FftProvider;
use crate::grid::SpatialGrid;
use crate::math::kahan_sum;
use crate::params::DispersionParams;
use crate::spectral::{forward_samples, inverse_coeffs, omega};

/// Coefficients `û(ξ_i, λ_m) ≈ ∬ e^{i(xξ+tλ)} u dx dt`.
///
/// Stored row-major with one row per `ξ` slot and `λ` contiguous; both
/// axes in transform order. `λ_m = t_grid.xi(m)`. Physical samples use the
/// same layout, one row per `x` sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SpacetimeField {
    pub xi_grid: SpatialGrid,
    pub t_grid: SpatialGrid,
    pub coeffs: Vec<Complex64>,
}

fn transpose(data: &[Complex64], rows: usize, cols: usize) -> Vec<Complex64> {
    let mut out = alloc::vec![Complex64::new(0.0, 0.0); data.len()];
    for r in 0..rows {
        for c in 0..cols {
            out[c * rows + r] = data[r * cols + c];
        }
    }
    out
}

impl SpacetimeField {
    pub fn zeros(xi_grid: SpatialGrid, t_grid: SpatialGrid) -> Self {
        Self {
            xi_grid,
            t_grid,
            coeffs: alloc::vec![Complex64::new(0.0, 0.0); xi_grid.len() * t_grid.len()],
        }
    }

    pub fn nx(&self) -> usize {
        self.xi_grid.len()
    }

    pub fn nt(&self) -> usize {
        self.t_grid.len()
    }

    #[inline]
    pub fn at(&self, i: usize, m: usize) -> Complex64 {
        self.coeffs[i * self.nt() + m]
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        let nt = self.nt();
        &self.coeffs[i * nt..(i + 1) * nt]
    }

    pub fn lambda(&self, m: usize) -> f64 {
        self.t_grid.xi(m)
    }

    /// `λ_m − ω(ξ_i)`.
    #[inline]
    pub fn modulation(&self, params: &DispersionParams, i: usize, m: usize) -> f64 {
        self.lambda(m) - omega(params, self.xi_grid.xi(i))
    }

    /// Coefficients from a spectral function `f(ξ, λ)`.
    pub fn from_spectral_fn(
        xi_grid: SpatialGrid,
        t_grid: SpatialGrid,
        mut f: impl FnMut(f64, f64) -> Complex64,
    ) -> Self {
        let mut out = Self::zeros(xi_grid, t_grid);
        let nt = t_grid.len();
        for i in 0..xi_grid.len() {
            let xi = xi_grid.xi(i);
            for m in 0..nt {
                out.coeffs[i * nt + m] = f(xi, t_grid.xi(m));
            }
        }
        out
    }

    /// Forward transform of physical samples laid out `[x][t]`.
    pub fn from_samples(
        fft: &dyn FftProvider,
        xi_grid: SpatialGrid,
        t_grid: SpatialGrid,
        samples: &[Complex64],
    ) -> Result<Self> {
        let (nx, nt) = (xi_grid.len(), t_grid.len());
        if samples.len() != nx * nt {
            bail!(
                Config,
                "expected {} samples, got {}",
                nx * nt,
                samples.len()
            );
        }
        let mut buf = samples.to_vec();
        for row in buf.chunks_mut(nt) {
            forward_samples(fft, &t_grid, row)?;
        }
        let mut tr = transpose(&buf, nx, nt);
        for col in tr.chunks_mut(nx) {
            forward_samples(fft, &xi_grid, col)?;
        }
        Ok(Self {
            xi_grid,
            t_grid,
            coeffs: transpose(&tr, nt, nx),
        })
    }

    /// Physical samples `[x][t]`.
    pub fn to_samples(&self, fft: &dyn FftProvider) -> Vec<Complex64> {
        let (nx, nt) = (self.nx(), self.nt());
        let mut tr = transpose(&self.coeffs, nx, nt);
        for col in tr.chunks_mut(nx) {
            inverse_coeffs(fft, &self.xi_grid, col).expect("grid sized");
        }
        let mut buf = transpose(&tr, nt, nx);
        for row in buf.chunks_mut(nt) {
            inverse_coeffs(fft, &self.t_grid, row).expect("grid sized");
        }
        buf
    }

    /// Transform in `t` only of samples `[ξ][t]` (spatial coefficients at
    /// each time).
    pub fn from_spatial_coeffs_in_time(
        fft: &dyn FftProvider,
        xi_grid: SpatialGrid,
        t_grid: SpatialGrid,
        data: &[Complex64],
    ) -> Result<Self> {
        let nt = t_grid.len();
        if data.len() != xi_grid.len() * nt {
            bail!(
                Config,
                "expected {} values, got {}",
                xi_grid.len() * nt,
                data.len()
            );
        }
        let mut buf = data.to_vec();
        for row in buf.chunks_mut(nt) {
            forward_samples(fft, &t_grid, row)?;
        }
        Ok(Self {
            xi_grid,
            t_grid,
            coeffs: buf,
        })
    }

    /// Spatial coefficients at every time sample, laid out `[ξ][t]`.
    pub fn to_spatial_coeffs_in_time(&self, fft: &dyn FftProvider) -> Vec<Complex64> {
        let nt = self.nt();
        let mut buf = self.coeffs.clone();
        for row in buf.chunks_mut(nt) {
            inverse_coeffs(fft, &self.t_grid, row).expect("grid sized");
        }
        buf
    }

    /// `‖u‖²_{L²(dx dt)}` by Parseval.
    pub fn l2_norm_sq(&self) -> f64 {
        kahan_sum(self.coeffs.iter().map(|c| c.norm_sqr()))
            / (self.xi_grid.length() * self.t_grid.length())
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.norm()))
    }

    pub fn scaled(&self, k: f64) -> Self {
        self.map(|c| c * k)
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self {
            xi_grid: self.xi_grid,
            t_grid: self.t_grid,
            coeffs: self.coeffs.iter().map(|&c| f(c)).collect(),
        }
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Self {
        Self {
            xi_grid: self.xi_grid,
            t_grid: self.t_grid,
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a - b)
    }

    /// Translate in space: `u(x − x0, t)`, i.e. multiply by `e^{i x0 ξ}`.
    pub fn translated(&self, x0: f64) -> Self {
        let mut out = self.clone();
        let nt = self.nt();
        for i in 0..self.nx() {
            let ph = crate::math::cis(x0 * self.xi_grid.xi(i));
            for c in &mut out.coeffs[i * nt..(i + 1) * nt] {
                *c *= ph;
            }
        }
        out
    }

    /// Largest violation of `û(−ξ,−λ) = conj û(ξ,λ)` away from Nyquist slots.
    pub fn conjugate_asymmetry(&self) -> f64 {
        let (nx, nt) = (self.nx(), self.nt());
        let mut worst: f64 = 0.0;
        for i in 0..nx {
            if i == nx / 2 {
                continue;
            }
            let ni = (nx - i) % nx;
            for m in 0..nt {
                if m == nt / 2 {
                    continue;
                }
                let nm = (nt - m) % nt;
                worst = worst.max((self.at(i, m) - self.at(ni, nm).conj()).norm());
            }
        }
        worst
    }
}

/// Linear discrete convolution `(1/(L T)) Σ û₁(ξ₁,λ₁) û₂(ξ−ξ₁, λ−λ₁)`,
/// which is the transform of the product `u₁u₂`.
///
/// Computed by zero padding both axes by two and multiplying in physical
/// space. Output mass that falls outside the input grid is reported as a
/// coverage error when it exceeds `clip_tol` of the total.
pub fn convolve(
    fft: &dyn FftProvider,
    a: &SpacetimeField,
    b: &SpacetimeField,
    clip_tol: f64,
) -> Result<SpacetimeField> {
    if a.xi_grid != b.xi_grid || a.t_grid != b.t_grid {
        bail!(Config, "convolution operands live on different grids");
    }
    let (nx, nt) = (a.nx(), a.nt());
    let gx = SpatialGrid::with_origin(2 * nx, a.xi_grid.length(), a.xi_grid.origin())?;
    let gt = SpatialGrid::with_origin(2 * nt, a.t_grid.length(), a.t_grid.origin())?;
    let pad = |f: &SpacetimeField| {
        let mut out = SpacetimeField::zeros(gx, gt);
        for i in 0..nx {
            let ii = gx.slot(a.xi_grid.wavenumber(i)).expect("padded grid");
            for m in 0..nt {
                let mm = gt.slot(a.t_grid.wavenumber(m)).expect("padded grid");
                out.coeffs[ii * 2 * nt + mm] = f.at(i, m);
            }
        }
        out
    };
    let pa = pad(a).to_samples(fft);
    let pb = pad(b).to_samples(fft);
    let prod: Vec<Complex64> = pa.iter().zip(&pb).map(|(x, y)| x * y).collect();
    let big = SpacetimeField::from_samples(fft, gx, gt, &prod)?;
    let mut out = SpacetimeField::zeros(a.xi_grid, a.t_grid);
    let mut kept = 0.0;
    for i in 0..nx {
        let ii = gx.slot(a.xi_grid.wavenumber(i)).expect("padded grid");
        for m in 0..nt {
            let mm = gt.slot(a.t_grid.wavenumber(m)).expect("padded grid");
            let v = big.coeffs[ii * 2 * nt + mm];
            kept += v.norm_sqr();
            out.coeffs[i * nt + m] = v;
        }
    }
    let total = kahan_sum(big.coeffs.iter().map(|c| c.norm_sqr()));
    if total > 0.0 && (total - kept) / total > clip_tol {
        bail!(
            Coverage,
            "convolution support leaves the grid: clipped fraction {:.3e}",
            (total - kept) / total
        );
    }
    Ok(out)
}

#[cfg(all(test, feature = "std"))]
mod tests {
    use super::*;
    use crate::fft::RustFft;
    use crate::rng::seeded;
    use rand::Rng;

    #[test]
    fn round_trip() {
        let fft = RustFft::new();
        let gx = SpatialGrid::new(16, 7.0).unwrap();
        let gt = SpatialGrid::new(8, 3.0).unwrap();
        let mut rng = seeded(1);
        let s: Vec<Complex64> = (0..128)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let f = SpacetimeField::from_samples(&fft, gx, gt, &s).unwrap();
        let back = f.to_samples(&fft);
        for (a, b) in s.iter().zip(&back) {
            assert!((a - b).norm() < 1e-12);
        }
        let direct: f64 = s.iter().map(|c| c.norm_sqr()).sum::<f64>() * gx.dx() * gt.dx();
        assert!((direct - f.l2_norm_sq()).abs() < 1e-10 * direct);
    }

    #[test]
    fn real_fields_are_conjugate_symmetric() {
        let fft = RustFft::new();
        let gx = SpatialGrid::new(16, 7.0).unwrap();
        let gt = SpatialGrid::new(8, 3.0).unwrap();
        let mut rng = seeded(2);
        let s: Vec<Complex64> = (0..128)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), 0.0))
            .collect();
        let f = SpacetimeField::from_samples(&fft, gx, gt, &s).unwrap();
        assert!(f.conjugate_asymmetry() < 1e-12);
    }

    #[test]
    fn convolution_matches_double_sum() {
        let fft = RustFft::new();
        let gx = SpatialGrid::new(8, 5.0).unwrap();
        let gt = SpatialGrid::new(8, 4.0).unwrap();
        let mut rng = seeded(3);
        // Supports inside the central half so no output leaves the grid.
        let mut rand_field = || {
            SpacetimeField::from_spectral_fn(gx, gt, |xi, la| {
                let k = (xi / gx.dxi()).round() as i64;
                let m = (la / gt.dxi()).round() as i64;
                if k.abs() <= 1 && m.abs() <= 1 {
                    Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
        };
        let a = rand_field();
        let b = rand_field();
        let c = convolve(&fft, &a, &b, 1e-12).unwrap();
        let norm = 1.0 / (gx.length() * gt.length());
        for i in 0..8 {
            for m in 0..8 {
                let (k, l) = (gx.wavenumber(i), gt.wavenumber(m));
                let mut acc = Complex64::new(0.0, 0.0);
                for i1 in 0..8 {
                    for m1 in 0..8 {
                        let (k1, l1) = (gx.wavenumber(i1), gt.wavenumber(m1));
                        if let (Some(i2), Some(m2)) = (gx.slot(k - k1), gt.slot(l - l1)) {
                            acc += a.at(i1, m1) * b.at(i2, m2);
                        }
                    }
                }
                assert!((acc * norm - c.at(i, m)).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn convolution_reports_clipping() {
        let fft = RustFft::new();
        let gx = SpatialGrid::new(8, 5.0).unwrap();
        let gt = SpatialGrid::new(8, 4.0).unwrap();
        let edge = SpacetimeField::from_spectral_fn(gx, gt, |xi, _| {
            if (xi / gx.dxi()).round() as i64 == 3 {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        assert!(matches!(
            convolve(&fft, &edge, &edge, 1e-6),
            Err(crate::Error::Coverage(_))
        ));
    }
}
