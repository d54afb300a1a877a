//! Dyadic modulation layers and the spacetime norms built on them.
//!
//! All Fourier-side integrals use the measure `dξ/(2π)` per variable, so
//! `H^0 = L²` and `‖u‖_{L²} ≤ ‖u‖_{X^0_0}` holds with constant one.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{bail, Error, Result};
use crate::fft::FftProvider;
use crate::grid::SpatialGrid;
use crate::math::{cos, floor, kahan_sum, log2, powf, sqrt, PI};
use crate::params::DispersionParams;
use crate::spacetime::SpacetimeField;
use crate::spectral::{omega, SpectralField};

/// Fraction of each axis treated as boundary by the weighted norms.
pub const TAPER_FRACTION: f64 = 0.1;
/// Row mass fraction beyond which a row must lie inside the `λ` window.
pub const COVERAGE_TOL: f64 = 1e-10;
/// Largest boundary mass fraction tolerated before a weight is unresolvable.
pub const BOUNDARY_LIMIT: f64 = 0.01;

fn smoothstep(t: f64) -> f64 {
    t * t * t * (10.0 + t * (-15.0 + 6.0 * t))
}

/// Even polynomial bump: 1 on `[−1/2, 1/2]`, 0 outside `(−1, 1)`, `C²`.
pub fn bump(z: f64) -> f64 {
    let a = z.abs();
    if a <= 0.5 {
        1.0
    } else if a >= 1.0 {
        0.0
    } else {
        smoothstep(2.0 * (1.0 - a))
    }
}

/// Annular bump `bump(z/2) − bump(z)`, supported in `1/2 < |z| < 2`.
pub fn annulus(z: f64) -> f64 {
    bump(z / 2.0) - bump(z)
}

/// Layer system over modulations `z = λ − ω(ξ)`.
///
/// Layer 0 is [`bump`]; layer `j ≥ 1` is `annulus(2^{1−j} z)`, carried by
/// `2^{j−2} < |z| < 2^j`. The layers telescope, so `Σ_{j≤J} χ_j = bump(2^{−J}z)`
/// is exactly 1 for `|z| ≤ 2^{J−1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DyadicDecomposition {
    pub j_max: usize,
}

impl DyadicDecomposition {
    /// Smallest layer count whose partition covers `|z| ≤ max_modulation`.
    pub fn covering(max_modulation: f64) -> Self {
        let m = max_modulation.abs().max(0.5);
        let j = crate::math::ceil(log2(m)) as i64 + 1;
        Self {
            j_max: j.max(1) as usize,
        }
    }

    pub fn layer(&self, j: usize, z: f64) -> f64 {
        if j == 0 {
            bump(z)
        } else {
            annulus(z * powf(2.0, 1.0 - j as f64))
        }
    }

    /// Nonzero `(j, χ_j(z))` pairs; at most two.
    pub fn active(&self, z: f64) -> impl Iterator<Item = (usize, f64)> + '_ {
        let a = z.abs();
        let lo = if a < 0.5 {
            0
        } else {
            (floor(log2(a)) as i64 + 1).max(0) as usize
        };
        (lo..=lo + 1)
            .filter(move |&j| j <= self.j_max)
            .map(move |j| (j, self.layer(j, z)))
            .filter(|&(_, w)| w > 0.0)
    }

    /// `max |Σ_j χ_j(z) − 1|` sampled on `|z| ≤ 2^{J_max−1}`.
    pub fn partition_defect(&self) -> f64 {
        let top = powf(2.0, self.j_max as f64 - 1.0);
        let samples = 20_000;
        let mut worst: f64 = 0.0;
        for k in 0..=samples {
            let z = top * k as f64 / samples as f64;
            let s: f64 = (0..=self.j_max).map(|j| self.layer(j, z)).sum();
            worst = worst.max((s - 1.0).abs());
        }
        worst
    }
}

/// Which norm a request or report refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NormKind {
    F,
    X,
    Y,
    Z,
    #[serde(rename = "tildeX")]
    TildeX,
    Cdual,
    L4ratio,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormRequest {
    pub kind: NormKind,
    pub s: f64,
    pub b: f64,
    pub s0: f64,
    pub s1: f64,
}

/// JSON-ready norm record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub kind: NormKind,
    pub s: f64,
    pub b: f64,
    pub value: f64,
    pub components: BTreeMap<String, f64>,
    pub partition_defect: f64,
}

/// Per-layer masses `∬ χ_j(λ−ω(ξ)) (1+|ξ|)^{2s} |û|² dξdλ/(4π²)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerMasses {
    pub masses: Vec<f64>,
    pub decomposition: DyadicDecomposition,
}

impl LayerMasses {
    /// `Σ_j 2^{jb} M_j^{1/2}`.
    pub fn l1(&self, b: f64) -> f64 {
        kahan_sum(
            self.masses
                .iter()
                .enumerate()
                .map(|(j, m)| powf(2.0, j as f64 * b) * sqrt(*m)),
        )
    }

    /// `(Σ_j 2^{2jb} M_j)^{1/2}`, the square-function variant.
    pub fn l2(&self, b: f64) -> f64 {
        sqrt(kahan_sum(
            self.masses
                .iter()
                .enumerate()
                .map(|(j, m)| powf(2.0, 2.0 * j as f64 * b) * m),
        ))
    }

    /// `sup_j 2^{jb} M_j^{1/2}`.
    pub fn sup(&self, b: f64) -> f64 {
        self.masses.iter().enumerate().fold(0.0, |acc, (j, m)| {
            acc.max(powf(2.0, j as f64 * b) * sqrt(*m))
        })
    }
}

fn check_coverage(params: &DispersionParams, u: &SpacetimeField) -> Result<()> {
    let lam_max = u.t_grid.xi_max();
    let nt = u.nt();
    let total = kahan_sum(u.coeffs.iter().map(|c| c.norm_sqr()));
    if total == 0.0 {
        return Ok(());
    }
    for i in 0..u.nx() {
        let w = omega(params, u.xi_grid.xi(i));
        if w.abs() <= lam_max {
            continue;
        }
        let row = kahan_sum(u.coeffs[i * nt..(i + 1) * nt].iter().map(|c| c.norm_sqr()));
        if row > COVERAGE_TOL * total {
            bail!(
                Coverage,
                "dispersive surface at xi = {} (omega = {w:.3e}) lies outside the lambda window ±{lam_max:.3e}",
                u.xi_grid.xi(i)
            );
        }
    }
    Ok(())
}

fn max_modulation(params: &DispersionParams, u: &SpacetimeField) -> f64 {
    let lam_max = u.t_grid.xi_max() + u.t_grid.dxi();
    (0..u.nx())
        .map(|i| omega(params, u.xi_grid.xi(i)).abs() + lam_max)
        .fold(0.0, f64::max)
}

/// Layer masses of `u` with spatial weight `(1+|ξ|)^{2s}`.
pub fn layer_masses(params: &DispersionParams, u: &SpacetimeField, s: f64) -> Result<LayerMasses> {
    check_coverage(params, u)?;
    let dec = DyadicDecomposition::covering(max_modulation(params, u));
    let mut masses = alloc::vec![0.0; dec.j_max + 1];
    let mut comp = alloc::vec![0.0; dec.j_max + 1];
    let measure = u.xi_grid.dxi() * u.t_grid.dxi() / (4.0 * PI * PI);
    let nt = u.nt();
    for i in 0..u.nx() {
        let xi = u.xi_grid.xi(i);
        let wxi = powf(1.0 + xi.abs(), 2.0 * s) * measure;
        let w = omega(params, xi);
        for m in 0..nt {
            let c = u.coeffs[i * nt + m];
            let a2 = c.norm_sqr();
            if a2 == 0.0 {
                continue;
            }
            let z = u.lambda(m) - w;
            for (j, chi) in dec.active(z) {
                // Compensated accumulation keeps layer sums order-stable.
                let y = chi * wxi * a2 - comp[j];
                let t = masses[j] + y;
                comp[j] = (t - masses[j]) - y;
                masses[j] = t;
            }
        }
    }
    Ok(LayerMasses {
        masses,
        decomposition: dec,
    })
}

/// `‖u‖_{X^b_s} = Σ_j 2^{jb} (∬ χ_j(λ−ω) (1+|ξ|)^{2s} |û|²)^{1/2}`.
pub fn norm_x(params: &DispersionParams, u: &SpacetimeField, s: f64, b: f64) -> Result<f64> {
    Ok(layer_masses(params, u, s)?.l1(b))
}

/// Square-function variant `(Σ_j 2^{2jb} M_j)^{1/2}`, for diagnostics.
pub fn norm_x_l2(params: &DispersionParams, u: &SpacetimeField, s: f64, b: f64) -> Result<f64> {
    Ok(layer_masses(params, u, s)?.l2(b))
}

/// `(∬ (1+|λ−ω|)^{2b} (1+|ξ|)^{2s} |û|²)^{1/2}`.
pub fn norm_tilde_x(params: &DispersionParams, u: &SpacetimeField, s: f64, b: f64) -> Result<f64> {
    check_coverage(params, u)?;
    let measure = u.xi_grid.dxi() * u.t_grid.dxi() / (4.0 * PI * PI);
    let nt = u.nt();
    let mut acc = Vec::with_capacity(u.coeffs.len());
    for i in 0..u.nx() {
        let xi = u.xi_grid.xi(i);
        let wxi = powf(1.0 + xi.abs(), 2.0 * s);
        let w = omega(params, xi);
        for m in 0..nt {
            let z = u.lambda(m) - w;
            acc.push(powf(1.0 + z.abs(), 2.0 * b) * wxi * u.coeffs[i * nt + m].norm_sqr());
        }
    }
    Ok(sqrt(kahan_sum(acc) * measure))
}

/// `sup_j 2^{j/2} (∬ χ_j(λ−ω) (1+|ξ|)^{2s} |ĝ|²)^{1/2}`; the dual of
/// `X^{−1/2}_{−s}` under `∬ û ĝ̄ dξdλ/(4π²)`.
pub fn norm_cdual(params: &DispersionParams, u: &SpacetimeField, s: f64) -> Result<f64> {
    Ok(layer_masses(params, u, s)?.sup(0.5))
}

/// `∬ û ĝ̄ dξ dλ / (4π²)`.
pub fn pairing(u: &SpacetimeField, g: &SpacetimeField) -> Complex64 {
    let measure = u.xi_grid.dxi() * u.t_grid.dxi() / (4.0 * PI * PI);
    let mut re = Vec::with_capacity(u.coeffs.len());
    let mut im = Vec::with_capacity(u.coeffs.len());
    for (a, b) in u.coeffs.iter().zip(&g.coeffs) {
        let p = a * b.conj();
        re.push(p.re);
        im.push(p.im);
    }
    Complex64::new(kahan_sum(re), kahan_sum(im)) * measure
}

fn taper_weight(k: i64, n: usize) -> f64 {
    let half = (n / 2) as f64;
    let edge = (1.0 - TAPER_FRACTION) * half;
    let a = k.abs() as f64;
    if a <= edge {
        1.0
    } else {
        let t = ((a - edge) / (half - edge)).min(1.0);
        0.5 * (1.0 + cos(PI * t))
    }
}

fn boundary_fraction(weights: impl Iterator<Item = (f64, f64)>, grid: &SpatialGrid) -> f64 {
    let centre = grid.origin() + grid.length() / 2.0;
    let inner = (0.5 - TAPER_FRACTION) * grid.length();
    let mut edge = Vec::new();
    let mut all = Vec::new();
    for (x, m) in weights {
        all.push(m);
        if (x - centre).abs() > inner {
            edge.push(m);
        }
    }
    let total = kahan_sum(all);
    if total == 0.0 {
        0.0
    } else {
        kahan_sum(edge) / total
    }
}

/// Which spacetime coordinate multiplies the field.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Weight {
    X,
    T,
}

/// `x·u` or `t·u`: spectral differentiation in `ξ` or `λ` of the tapered
/// coefficients, realized by multiplying physical samples by the centred
/// coordinate.
pub fn weighted(
    fft: &dyn FftProvider,
    u: &SpacetimeField,
    weight: Weight,
) -> Result<SpacetimeField> {
    let (nx, nt) = (u.nx(), u.nt());
    let mut tapered = u.clone();
    for i in 0..nx {
        let wx = match weight {
            Weight::X => taper_weight(u.xi_grid.wavenumber(i), nx),
            Weight::T => 1.0,
        };
        for m in 0..nt {
            let wt = match weight {
                Weight::X => 1.0,
                Weight::T => taper_weight(u.t_grid.wavenumber(m), nt),
            };
            tapered.coeffs[i * nt + m] *= wx * wt;
        }
    }
    let mut samples = tapered.to_samples(fft);
    let (grid, coord): (&SpatialGrid, Vec<f64>) = match weight {
        Weight::X => (&u.xi_grid, u.xi_grid.xs()),
        Weight::T => (&u.t_grid, u.t_grid.xs()),
    };
    let frac = match weight {
        Weight::X => boundary_fraction(
            (0..nx).map(|i| {
                (
                    coord[i],
                    kahan_sum((0..nt).map(|m| samples[i * nt + m].norm_sqr())),
                )
            }),
            grid,
        ),
        Weight::T => boundary_fraction(
            (0..nt).map(|m| {
                (
                    coord[m],
                    kahan_sum((0..nx).map(|i| samples[i * nt + m].norm_sqr())),
                )
            }),
            grid,
        ),
    };
    if frac > BOUNDARY_LIMIT {
        return Err(Error::WeightUnresolvable {
            fraction: frac,
            limit: BOUNDARY_LIMIT,
        });
    }
    for i in 0..nx {
        for m in 0..nt {
            let c = match weight {
                Weight::X => coord[i],
                Weight::T => coord[m],
            };
            samples[i * nt + m] *= c;
        }
    }
    SpacetimeField::from_samples(fft, u.xi_grid, u.t_grid, &samples)
}

/// `‖xu‖_{X^b_{s0}} + ‖tu‖_{X^b_{s1}}`.
pub fn norm_y(
    fft: &dyn FftProvider,
    params: &DispersionParams,
    u: &SpacetimeField,
    s0: f64,
    s1: f64,
    b: f64,
) -> Result<f64> {
    let (x, t) = y_components(fft, params, u, s0, s1, b)?;
    Ok(x + t)
}

fn y_components(
    fft: &dyn FftProvider,
    params: &DispersionParams,
    u: &SpacetimeField,
    s0: f64,
    s1: f64,
    b: f64,
) -> Result<(f64, f64)> {
    let xu = weighted(fft, u, Weight::X)?;
    let tu = weighted(fft, u, Weight::T)?;
    Ok((norm_x(params, &xu, s0, b)?, norm_x(params, &tu, s1, b)?))
}

/// `‖u‖_{X^b_s} + ‖u‖_{Y^b_{s−2s*, s}}` for one canonical extension; an
/// upper bound for the restriction norm.
pub fn norm_z(
    fft: &dyn FftProvider,
    params: &DispersionParams,
    u: &SpacetimeField,
    s: f64,
    b: f64,
) -> Result<f64> {
    Ok(norm_x(params, u, s, b)? + norm_y(fft, params, u, s - 2.0 * params.s_star, s, b)?)
}

/// `‖u‖_{L⁴(dx dt)} / ‖u‖_{X^{b0}_0}`.
pub fn strichartz_ratio(
    fft: &dyn FftProvider,
    params: &DispersionParams,
    u: &SpacetimeField,
) -> Result<f64> {
    let den = norm_x(params, u, 0.0, params.b0)?;
    if den == 0.0 {
        bail!(Degenerate, "zero field has no Strichartz ratio");
    }
    Ok(l4_norm(fft, u) / den)
}

/// `(∬ |u|⁴ dx dt)^{1/4}` by quadrature on the physical grid.
pub fn l4_norm(fft: &dyn FftProvider, u: &SpacetimeField) -> f64 {
    let samples = u.to_samples(fft);
    let q = kahan_sum(samples.iter().map(|c| c.norm_sqr() * c.norm_sqr()));
    sqrt(sqrt(q * u.xi_grid.dx() * u.t_grid.dx()))
}

/// Components of the initial-data norm `‖f‖_{H^s} + ‖xf‖_{H^{s−2s*}}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FNorm {
    pub sobolev: f64,
    pub weighted: f64,
}

impl FNorm {
    pub fn value(&self) -> f64 {
        self.sobolev + self.weighted
    }
}

/// `x·f` for a spatial field, with the same taper and boundary rule as
/// [`weighted`].
pub fn x_weighted(fft: &dyn FftProvider, f: &SpectralField) -> Result<SpectralField> {
    let n = f.grid.len();
    let mut tapered = f.clone();
    for (i, c) in tapered.coeffs.iter_mut().enumerate() {
        *c *= taper_weight(f.grid.wavenumber(i), n);
    }
    let samples = tapered.to_complex_samples(fft);
    let xs = f.grid.xs();
    let frac = boundary_fraction(
        xs.iter().zip(&samples).map(|(&x, c)| (x, c.norm_sqr())),
        &f.grid,
    );
    if frac > BOUNDARY_LIMIT {
        return Err(Error::WeightUnresolvable {
            fraction: frac,
            limit: BOUNDARY_LIMIT,
        });
    }
    let weighted: Vec<Complex64> = samples.iter().zip(&xs).map(|(c, &x)| c * x).collect();
    SpectralField::from_complex_samples(fft, f.grid, &weighted)
}

pub fn norm_f_parts(
    fft: &dyn FftProvider,
    params: &DispersionParams,
    f: &SpectralField,
    s: f64,
) -> Result<FNorm> {
    let xf = x_weighted(fft, f)?;
    Ok(FNorm {
        sobolev: f.sobolev_norm(s),
        weighted: xf.sobolev_norm(s - 2.0 * params.s_star),
    })
}

/// `‖f‖_{F^s} = ‖f‖_{H^s} + ‖xf‖_{H^{s−2s*}}`.
pub fn norm_f(
    fft: &dyn FftProvider,
    params: &DispersionParams,
    f: &SpectralField,
    s: f64,
) -> Result<f64> {
    Ok(norm_f_parts(fft, params, f, s)?.value())
}

/// Evaluate a request and package it as a report.
pub fn evaluate(
    fft: &dyn FftProvider,
    params: &DispersionParams,
    u: &SpacetimeField,
    req: &NormRequest,
) -> Result<NormReport> {
    let mut components = BTreeMap::new();
    let masses = layer_masses(params, u, req.s)?;
    let defect = masses.decomposition.partition_defect();
    let value = match req.kind {
        NormKind::X => {
            components.insert("l2_variant".to_string(), masses.l2(req.b));
            components.insert("layers".to_string(), masses.masses.len() as f64);
            masses.l1(req.b)
        }
        NormKind::Y => {
            let (x, t) = y_components(fft, params, u, req.s0, req.s1, req.b)?;
            components.insert("x_weight".to_string(), x);
            components.insert("t_weight".to_string(), t);
            x + t
        }
        NormKind::Z => {
            let x = masses.l1(req.b);
            let (yx, yt) = y_components(fft, params, u, req.s - 2.0 * params.s_star, req.s, req.b)?;
            components.insert("x".to_string(), x);
            components.insert("y_x_weight".to_string(), yx);
            components.insert("y_t_weight".to_string(), yt);
            x + yx + yt
        }
        NormKind::TildeX => norm_tilde_x(params, u, req.s, req.b)?,
        NormKind::Cdual => masses.sup(0.5),
        NormKind::L4ratio => {
            let l4 = l4_norm(fft, u);
            let den = layer_masses(params, u, 0.0)?.l1(params.b0);
            if den == 0.0 {
                bail!(Degenerate, "zero field has no Strichartz ratio");
            }
            components.insert("l4".to_string(), l4);
            components.insert("x_b0".to_string(), den);
            l4 / den
        }
        NormKind::F => bail!(Config, "the F norm applies to spatial fields; use norm_f"),
    };
    Ok(NormReport {
        kind: req.kind,
        s: req.s,
        b: req.b,
        value,
        components,
        partition_defect: defect,
    })
}

/// Spacetime field `cutoff(t)·W(t)u0` sampled on `t_grid`.
pub fn windowed_flow(
    fft: &dyn FftProvider,
    params: &DispersionParams,
    u0: &SpectralField,
    t_grid: SpatialGrid,
    cutoff: impl Fn(f64) -> f64,
) -> Result<SpacetimeField> {
    let (nx, nt) = (u0.grid.len(), t_grid.len());
    let mut data = alloc::vec![Complex64::new(0.0, 0.0); nx * nt];
    for m in 0..nt {
        let t = t_grid.x(m);
        let w = cutoff(t);
        if w == 0.0 {
            continue;
        }
        let ut = u0.propagate(params, t);
        for i in 0..nx {
            data[i * nt + m] = ut.coeffs[i] * w;
        }
    }
    SpacetimeField::from_spatial_coeffs_in_time(fft, u0.grid, t_grid, &data)
}
