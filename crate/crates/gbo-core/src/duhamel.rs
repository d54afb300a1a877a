//! Time cutoffs, the Duhamel map and the Picard iteration built on it.
//!
//! The nonlinearity is `−½∂x(v²)`, matching [`crate::dynamics`], so a Picard
//! limit and a time-stepped solution can be compared directly. Time lives on
//! a periodic box of length `window_factor·δ` centred on `t = 0`; every field
//! handled here carries the cutoff `ψ(t/δ)` and so vanishes near the box edge.

use alloc::vec::Vec;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bourgain::{bump, norm_f, norm_tilde_x, norm_x, norm_z, windowed_flow};
use crate::dynamics::Nonlinearity;
use crate::error::{bail, Error, Result};
use crate::fft::FftProvider;
use crate::grid::SpatialGrid;
use crate::math::{cis, floor, kahan_sum, log2, powf, sqrt};
use crate::params::DispersionParams;
use crate::spacetime::SpacetimeField;
use crate::spectral::{forward_samples, inverse_coeffs, omega, SpectralField};
use crate::xlab::{fit_exponent, Fit};

/// Dealiasing used for the quadratic term, the same as the time stepper's.
pub const DEALIAS: f64 = 2.0 / 3.0;
/// Largest tolerated spectral tail of the time integrand.
pub const QUADRATURE_LIMIT: f64 = 0.01;

/// `ψ(t/δ)` with `ψ` the polynomial bump of [`crate::bourgain::bump`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeCutoff {
    pub delta: f64,
}

impl TimeCutoff {
    pub fn new(delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta <= 1.0) {
            bail!(Config, "cutoff scale must lie in (0, 1], got {delta}");
        }
        Ok(Self { delta })
    }

    pub fn psi(&self, t: f64) -> f64 {
        bump(t / self.delta)
    }

    /// The auxiliary cutoff: the same bump at twice the width.
    pub fn psi_tilde(&self, t: f64) -> f64 {
        bump(t / (2.0 * self.delta))
    }
}

/// Multiply by `ψ(t/δ)` in physical time.
pub fn apply_cutoff(
    fft: &dyn FftProvider,
    cutoff: &TimeCutoff,
    u: &SpacetimeField,
) -> SpacetimeField {
    let nt = u.nt();
    let mut data = u.to_spatial_coeffs_in_time(fft);
    let weights: Vec<f64> = (0..nt).map(|m| cutoff.psi(u.t_grid.x(m))).collect();
    for row in data.chunks_mut(nt) {
        for (c, w) in row.iter_mut().zip(&weights) {
            *c *= *w;
        }
    }
    SpacetimeField::from_spatial_coeffs_in_time(fft, u.xi_grid, u.t_grid, &data)
        .expect("same grids")
}

fn check_inputs(u0: &SpectralField, v: &SpacetimeField) -> Result<()> {
    if v.xi_grid != u0.grid {
        bail!(Config, "data and iterate live on different spatial grids");
    }
    let t0 = v.t_grid.origin() + v.t_grid.length() / 2.0;
    if v.t_grid.len() % 2 != 0 || t0.abs() > 1e-12 * v.t_grid.length() {
        bail!(
            Config,
            "time grid must have an even sample count and be centred on t = 0"
        );
    }
    let tol = 1e-9 * v.max_abs().max(1e-300);
    let asym = v.conjugate_asymmetry();
    if asym > tol {
        bail!(
            Contract,
            "iterate is not real-valued (asymmetry {asym:.3e})"
        );
    }
    Ok(())
}

/// `e^{−iω(ξ)t}·F(−½∂x(v²))(ξ, t)` laid out `[ξ][t]`.
fn interaction_integrand(
    fft: &dyn FftProvider,
    params: &DispersionParams,
    v: &SpacetimeField,
) -> Vec<Complex64> {
    let (nx, nt) = (v.nx(), v.nt());
    let data = v.to_spatial_coeffs_in_time(fft);
    let probe = SpectralField::zeros(v.xi_grid);
    let nl = Nonlinearity::new(fft, &probe, DEALIAS, 1.0);
    let omegas: Vec<f64> = (0..nx).map(|i| omega(params, v.xi_grid.xi(i))).collect();
    let mut out = alloc::vec![Complex64::new(0.0, 0.0); nx * nt];
    let mut column = alloc::vec![Complex64::new(0.0, 0.0); nx];
    for m in 0..nt {
        for i in 0..nx {
            column[i] = data[i * nt + m];
        }
        if column.iter().all(|c| c.norm_sqr() == 0.0) {
            continue;
        }
        let t = v.t_grid.x(m);
        let n = nl.eval(&column, &v.xi_grid);
        for i in 0..nx {
            out[i * nt + m] = n[i] * cis(-omegas[i] * t);
        }
    }
    out
}

/// `∫₀^t g` at every node, from the trigonometric interpolant of `g`, and the
/// energy fraction of `g` in the top half of the frequency band.
fn antiderivative(
    fft: &dyn FftProvider,
    t_grid: &SpatialGrid,
    g: &[Complex64],
) -> (Vec<Complex64>, f64, f64) {
    let nt = t_grid.len();
    let mut c = g.to_vec();
    forward_samples(fft, t_grid, &mut c).expect("grid sized");
    let total = kahan_sum(c.iter().map(|z| z.norm_sqr()));
    let tail = kahan_sum(
        c.iter()
            .enumerate()
            .filter(|(k, _)| t_grid.wavenumber(*k).unsigned_abs() as usize > nt / 4)
            .map(|(_, z)| z.norm_sqr()),
    );
    let mean = c[0] / t_grid.length();
    let nyq = t_grid.nyquist_slot();
    for (k, z) in c.iter_mut().enumerate() {
        *z = if k == 0 || k == nyq {
            Complex64::new(0.0, 0.0)
        } else {
            *z / Complex64::new(0.0, -t_grid.xi(k))
        };
    }
    inverse_coeffs(fft, t_grid, &mut c).expect("grid sized");
    let p0 = c[nt / 2];
    let out = (0..nt).map(|m| mean * t_grid.x(m) + c[m] - p0).collect();
    (out, tail, total)
}

/// `Φ(v) = ψ(t/δ)W(t)u0 + ψ(t/δ)∫₀ᵗ W(t−t′)(−½∂x(v²))(t′) dt′`.
///
/// The propagator is applied exactly; the remaining integrand is integrated
/// through its trigonometric interpolant on the time grid. If more than
/// [`QUADRATURE_LIMIT`] of that integrand (in amplitude) sits in the upper
/// half of the band the grid is rejected.
pub fn duhamel_map(
    fft: &dyn FftProvider,
    params: &DispersionParams,
    cutoff: &TimeCutoff,
    u0: &SpectralField,
    v: &SpacetimeField,
) -> Result<SpacetimeField> {
    check_inputs(u0, v)?;
    let (nx, nt) = (v.nx(), v.nt());
    let g = interaction_integrand(fft, params, v);
    let mut integral = alloc::vec![Complex64::new(0.0, 0.0); nx * nt];
    let (mut tail, mut total) = (0.0, 0.0);
    for i in 0..nx {
        let row = &g[i * nt..(i + 1) * nt];
        if row.iter().all(|c| c.norm_sqr() == 0.0) {
            continue;
        }
        let (prim, t, m) = antiderivative(fft, &v.t_grid, row);
        tail += t;
        total += m;
        integral[i * nt..(i + 1) * nt].copy_from_slice(&prim);
    }
    if total > 0.0 && sqrt(tail / total) > QUADRATURE_LIMIT {
        return Err(Error::Resolution {
            what: alloc::format!("time quadrature (spectral tail {:.2e})", sqrt(tail / total)),
            required: 2 * nt,
            actual: nt,
        });
    }
    let nyq = u0.grid.nyquist_slot();
    let mut data = integral;
    for i in 0..nx {
        let w = omega(params, u0.grid.xi(i));
        for m in 0..nt {
            let slot = &mut data[i * nt + m];
            if i == nyq {
                *slot = Complex64::new(0.0, 0.0);
                continue;
            }
            let t = v.t_grid.x(m);
            *slot = (u0.coeffs[i] + *slot) * cis(w * t) * cutoff.psi(t);
        }
    }
    SpacetimeField::from_spatial_coeffs_in_time(fft, u0.grid, v.t_grid, &data)
}

fn inner_nodes(t_grid: &SpatialGrid, cutoff: &TimeCutoff, margin: usize) -> Vec<usize> {
    let h = t_grid.dx();
    (margin..t_grid.len() - margin)
        .filter(|&m| t_grid.x(m).abs() + margin as f64 * h < cutoff.delta / 2.0)
        .collect()
}

/// Finite-difference check of `∂t Φ = ∂t(linear) − ½∂x(v²)` where `ψ ≡ 1`.
///
/// Works in the interaction picture, so the check reads
/// `∂t(e^{−iωt}Φ̂) = e^{−iωt}F(−½∂x(v²))`. The derivative is the five-point
/// central stencil. Returned relative to the largest `L²_x` size of the
/// right side (absolute when that vanishes).
pub fn duhamel_residual(
    fft: &dyn FftProvider,
    params: &DispersionParams,
    cutoff: &TimeCutoff,
    v: &SpacetimeField,
    phi: &SpacetimeField,
) -> Result<f64> {
    let (nx, nt) = (v.nx(), v.nt());
    let g = interaction_integrand(fft, params, v);
    let p = phi.to_spatial_coeffs_in_time(fft);
    let h = v.t_grid.dx();
    let nodes = inner_nodes(&v.t_grid, cutoff, 2);
    if nodes.is_empty() {
        return Err(Error::Resolution {
            what: "time nodes inside the inner half-window".into(),
            required: 5,
            actual: 0,
        });
    }
    let omegas: Vec<f64> = (0..nx).map(|i| omega(params, v.xi_grid.xi(i))).collect();
    let r = |i: usize, m: usize| p[i * nt + m] * cis(-omegas[i] * v.t_grid.x(m));
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for &m in &nodes {
        let mut err = Vec::with_capacity(nx);
        let mut size = Vec::with_capacity(nx);
        for i in 0..nx {
            let d =
                (-r(i, m + 2) + r(i, m + 1) * 8.0 - r(i, m - 1) * 8.0 + r(i, m - 2)) / (12.0 * h);
            err.push((d - g[i * nt + m]).norm_sqr());
            size.push(g[i * nt + m].norm_sqr());
        }
        worst = worst.max(sqrt(kahan_sum(err)));
        scale = scale.max(sqrt(kahan_sum(size)));
    }
    Ok(if scale > 0.0 { worst / scale } else { worst })
}

/// Largest relative `L²` mismatch `‖Φ(v) − v‖ / ‖v‖` over `|t| < δ/2`.
pub fn fixed_point_residual(
    fft: &dyn FftProvider,
    params: &DispersionParams,
    cutoff: &TimeCutoff,
    u0: &SpectralField,
    v: &SpacetimeField,
) -> Result<f64> {
    let phi = duhamel_map(fft, params, cutoff, u0, v)?;
    let nt = v.nt();
    let a = v.to_spatial_coeffs_in_time(fft);
    let b = phi.to_spatial_coeffs_in_time(fft);
    let (mut diff, mut size) = (Vec::new(), Vec::new());
    for m in inner_nodes(&v.t_grid, cutoff, 0) {
        for i in 0..v.nx() {
            diff.push((a[i * nt + m] - b[i * nt + m]).norm_sqr());
            size.push(a[i * nt + m].norm_sqr());
        }
    }
    let (d, s) = (kahan_sum(diff), kahan_sum(size));
    Ok(if s > 0.0 { sqrt(d / s) } else { sqrt(d) })
}

/// Knobs of a Picard run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PicardSetup {
    /// Time samples on the box.
    pub t_samples: usize,
    /// Box length in units of `δ`.
    pub window_factor: f64,
    /// Spatial index of the `Z^b_s` norm measuring iterates.
    pub s: f64,
    pub b: f64,
    pub k_max: usize,
    /// Linear constant `C` in the ball radius `2C‖u0‖_{F^{s*}}`.
    pub c_ball: f64,
    /// Stop once `d_k ≤ tolerance·a_ball`.
    pub tolerance: f64,
}

impl PicardSetup {
    pub fn new(params: &DispersionParams) -> Self {
        Self {
            t_samples: 512,
            window_factor: 4.0,
            s: params.s_star,
            b: 0.5,
            k_max: 40,
            c_ball: 1.0,
            tolerance: 1e-8,
        }
    }

    pub fn t_grid(&self, cutoff: &TimeCutoff) -> Result<SpatialGrid> {
        if self.window_factor < 2.5 {
            bail!(
                Config,
                "time box must be at least 2.5 delta wide, got {} delta",
                self.window_factor
            );
        }
        if self.t_samples < 16 || self.t_samples % 2 != 0 {
            bail!(
                Config,
                "need an even number of at least 16 time samples, got {}",
                self.t_samples
            );
        }
        SpatialGrid::new(self.t_samples, self.window_factor * cutoff.delta)
    }
}

/// History of a Picard run: `d_k = ‖v_{k+1} − v_k‖_{Z^b_s}` for every step.
#[derive(Debug, Clone, PartialEq)]
pub struct PicardState {
    /// Index of the last recorded difference.
    pub k: usize,
    pub v: SpacetimeField,
    pub a_ball: f64,
    pub diffs: Vec<f64>,
    /// `‖v_k‖_{Z^b_s}` for every iterate, starting with `v_0`.
    pub norms: Vec<f64>,
    pub converged: bool,
    pub diverged: bool,
}

impl PicardState {
    /// `d_{k+1}/d_k`, one entry per consecutive pair.
    pub fn ratios(&self) -> Vec<f64> {
        self.diffs
            .windows(2)
            .map(|w| if w[0] > 0.0 { w[1] / w[0] } else { 0.0 })
            .collect()
    }

    pub fn max_ratio(&self) -> f64 {
        self.ratios().into_iter().fold(0.0, f64::max)
    }
}

/// Iterate `v_{k+1} = Φ(v_k)` from the windowed linear flow.
pub fn picard_iterate(
    fft: &dyn FftProvider,
    params: &DispersionParams,
    cutoff: &TimeCutoff,
    u0: &SpectralField,
    setup: &PicardSetup,
) -> Result<PicardState> {
    iterate(fft, params, cutoff, u0, setup, true)
}

/// With `guarded` off the run ignores the ball and the stopping rule and
/// performs exactly `k_max` steps.
fn iterate(
    fft: &dyn FftProvider,
    params: &DispersionParams,
    cutoff: &TimeCutoff,
    u0: &SpectralField,
    setup: &PicardSetup,
    guarded: bool,
) -> Result<PicardState> {
    if setup.k_max == 0 {
        bail!(Config, "k_max must be at least 1");
    }
    let t_grid = setup.t_grid(cutoff)?;
    let a_ball = 2.0 * setup.c_ball * norm_f(fft, params, u0, params.s_star)?;
    let mut v = windowed_flow(fft, params, u0, t_grid, |t| cutoff.psi(t))?;
    let mut state = PicardState {
        k: 0,
        v: v.clone(),
        a_ball,
        diffs: Vec::new(),
        norms: alloc::vec![norm_z(fft, params, &v, setup.s, setup.b)?],
        converged: false,
        diverged: false,
    };
    for k in 0..setup.k_max {
        let next = duhamel_map(fft, params, cutoff, u0, &v)?;
        let d = norm_z(fft, params, &next.sub(&v), setup.s, setup.b)?;
        state.diffs.push(d);
        state.k = k;
        v = next;
        let size = norm_z(fft, params, &v, setup.s, setup.b)?;
        state.norms.push(size);
        if !size.is_finite() {
            state.diverged = true;
            break;
        }
        if !guarded {
            continue;
        }
        if size > 2.0 * a_ball {
            state.diverged = true;
            break;
        }
        if d <= setup.tolerance * a_ball {
            state.converged = true;
            break;
        }
    }
    state.v = v;
    Ok(state)
}

/// `‖ψ(t/δ)W(t)u0‖_{Z^b_s} / ‖u0‖_{F^{s*}}`, the linear constant entering
/// the ball radius.
pub fn linear_constant(
    fft: &dyn FftProvider,
    params: &DispersionParams,
    cutoff: &TimeCutoff,
    u0: &SpectralField,
    setup: &PicardSetup,
) -> Result<f64> {
    let f = norm_f(fft, params, u0, params.s_star)?;
    if f == 0.0 {
        bail!(Degenerate, "zero data cannot calibrate the linear constant");
    }
    let flow = windowed_flow(fft, params, u0, setup.t_grid(cutoff)?, |t| cutoff.psi(t))?;
    Ok(norm_z(fft, params, &flow, setup.s, setup.b)? / f)
}

/// Contraction constant `C_emp = r/(δ^{θ/2}·a_ball)` from the first ratio `r`
/// of a run at `delta`.
pub fn contraction_constant(
    fft: &dyn FftProvider,
    params: &DispersionParams,
    u0: &SpectralField,
    setup: &PicardSetup,
    delta: f64,
    theta: f64,
) -> Result<f64> {
    let mut probe = *setup;
    probe.k_max = 2;
    let state = iterate(fft, params, &TimeCutoff::new(delta)?, u0, &probe, false)?;
    let r = state.ratios().first().copied().unwrap_or(0.0);
    if state.a_ball == 0.0 {
        bail!(
            Degenerate,
            "zero data cannot calibrate the contraction constant"
        );
    }
    Ok(r / (powf(delta, theta / 2.0) * state.a_ball))
}

/// Largest dyadic `δ ≤ 1` with `c_emp·δ^{θ/2}·a_ball < 1/2`.
pub fn select_delta(c_emp: f64, theta: f64, a_ball: f64) -> Result<f64> {
    if !(theta > 0.0 && theta.is_finite()) {
        bail!(NumericDomain, "gain exponent must be positive, got {theta}");
    }
    if !(c_emp >= 0.0 && a_ball >= 0.0) {
        bail!(NumericDomain, "constants must be nonnegative");
    }
    for k in 0..=40 {
        let delta = powf(2.0, -(k as f64));
        if c_emp * powf(delta, theta / 2.0) * a_ball < 0.5 {
            return Ok(delta);
        }
    }
    bail!(
        NumericDomain,
        "no dyadic delta down to 2^-40 satisfies the smallness rule"
    )
}

/// First contraction ratio `d_1/d_0` at each `δ` and its fitted exponent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractionSweep {
    pub deltas: Vec<f64>,
    pub factors: Vec<f64>,
    pub fit: Fit,
}

pub fn contraction_sweep(
    fft: &dyn FftProvider,
    params: &DispersionParams,
    u0: &SpectralField,
    setup: &PicardSetup,
    deltas: &[f64],
) -> Result<ContractionSweep> {
    check_deltas(deltas)?;
    let mut probe = *setup;
    probe.k_max = 2;
    let mut factors = Vec::with_capacity(deltas.len());
    for &delta in deltas {
        let state = iterate(fft, params, &TimeCutoff::new(delta)?, u0, &probe, false)?;
        factors.push(state.ratios().first().copied().unwrap_or(0.0));
    }
    let series: Vec<(f64, f64)> = deltas
        .iter()
        .copied()
        .zip(factors.iter().copied())
        .collect();
    let fit = fit_exponent(&series)?;
    Ok(ContractionSweep {
        deltas: deltas.to_vec(),
        factors,
        fit,
    })
}

/// Lipschitz ratios of the data-to-solution map at several perturbation sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuityReport {
    pub sizes: Vec<f64>,
    /// `‖Δu0‖_{F^{s*}}`.
    pub data_diffs: Vec<f64>,
    /// `‖Δv‖_{Z^b_s}` between the two Picard limits.
    pub solution_diffs: Vec<f64>,
    pub ratios: Vec<f64>,
    /// Largest `|r/median − 1|`.
    pub spread: f64,
}

/// Perturb `u0` by `size·direction` for each size and compare Picard limits.
pub fn solution_map_continuity(
    fft: &dyn FftProvider,
    params: &DispersionParams,
    cutoff: &TimeCutoff,
    u0: &SpectralField,
    direction: &SpectralField,
    sizes: &[f64],
    setup: &PicardSetup,
) -> Result<ContinuityReport> {
    if sizes.is_empty() {
        bail!(Config, "no perturbation sizes given");
    }
    let base = converged(picard_iterate(fft, params, cutoff, u0, setup)?, cutoff)?;
    let mut report = ContinuityReport {
        sizes: sizes.to_vec(),
        data_diffs: Vec::new(),
        solution_diffs: Vec::new(),
        ratios: Vec::new(),
        spread: 0.0,
    };
    for &size in sizes {
        let du = direction.scaled(size);
        let data = norm_f(fft, params, &du, params.s_star)?;
        let state = converged(
            picard_iterate(fft, params, cutoff, &u0.add(&du), setup)?,
            cutoff,
        )?;
        let sol = norm_z(fft, params, &state.v.sub(&base.v), setup.s, setup.b)?;
        report.data_diffs.push(data);
        report.solution_diffs.push(sol);
        report
            .ratios
            .push(if data > 0.0 { sol / data } else { 0.0 });
    }
    let mut sorted = report.ratios.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    report.spread = if median > 0.0 {
        report
            .ratios
            .iter()
            .map(|r| (r / median - 1.0).abs())
            .fold(0.0, f64::max)
    } else {
        0.0
    };
    Ok(report)
}

fn converged(state: PicardState, cutoff: &TimeCutoff) -> Result<PicardState> {
    if state.converged {
        return Ok(state);
    }
    let last = state.norms.last().copied().unwrap_or(0.0);
    Err(Error::Divergence {
        step: state.k,
        t: cutoff.delta,
        growth: if state.a_ball > 0.0 {
            last / state.a_ball
        } else {
            f64::INFINITY
        },
    })
}

/// Norm family compared across cutoff scales.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LemmaNorm {
    #[serde(rename = "tildeX")]
    TildeX,
    X,
    Z,
}

/// `sup_u ‖ψ(t/δ)u‖_{N^b_s} / ‖u‖_{N^{b_source}_s}` over a family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CutoffLemma {
    pub norm: LemmaNorm,
    pub s: f64,
    pub b: f64,
    pub b_source: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub lemma: CutoffLemma,
    pub deltas: Vec<f64>,
    pub ratios: Vec<f64>,
    /// Exponent fitted over every `δ`.
    pub fit: Fit,
    /// Exponent fitted over `δ ≤ 1/8`, when at least four such scales exist.
    pub tail_fit: Option<Fit>,
    /// Largest `|r/ḡ − 1|` with `ḡ` the geometric mean of the ratios.
    pub spread: f64,
}

/// Fewest time samples across the half-width of any bump.
pub const SAMPLES_PER_WIDTH: usize = 8;

fn check_window(width: f64, h: f64, what: &str) -> Result<()> {
    let have = floor(width / h + 1e-9) as usize;
    if have < SAMPLES_PER_WIDTH {
        return Err(Error::Resolution {
            what: alloc::format!("{what} {width}"),
            required: SAMPLES_PER_WIDTH,
            actual: have,
        });
    }
    Ok(())
}

fn check_deltas(deltas: &[f64]) -> Result<()> {
    if deltas.is_empty() {
        bail!(Config, "empty delta sweep");
    }
    for &d in deltas {
        let k = log2(d);
        if !(d > 0.0 && d <= 1.0) || (k - floor(k + 0.5)).abs() > 1e-12 {
            bail!(Config, "delta {d} is not dyadic in (0, 1]");
        }
    }
    Ok(())
}

fn lemma_norm(
    fft: &dyn FftProvider,
    params: &DispersionParams,
    u: &SpacetimeField,
    norm: LemmaNorm,
    s: f64,
    b: f64,
) -> Result<f64> {
    match norm {
        LemmaNorm::TildeX => norm_tilde_x(params, u, s, b),
        LemmaNorm::X => norm_x(params, u, s, b),
        LemmaNorm::Z => norm_z(fft, params, u, s, b),
    }
}

/// Measure a cutoff estimate across `deltas` and fit its `δ`-exponent.
pub fn cutoff_lemma_sweep(
    fft: &dyn FftProvider,
    params: &DispersionParams,
    family: &[SpacetimeField],
    lemma: &CutoffLemma,
    deltas: &[f64],
) -> Result<LemmaReport> {
    check_deltas(deltas)?;
    let mut sources = Vec::with_capacity(family.len());
    for u in family {
        sources.push(lemma_norm(
            fft,
            params,
            u,
            lemma.norm,
            lemma.s,
            lemma.b_source,
        )?);
    }
    if sources.iter().all(|&n| n == 0.0) {
        bail!(Degenerate, "every member of the family is zero");
    }
    let h = family[0].t_grid.dx();
    let mut ratios = Vec::with_capacity(deltas.len());
    for &delta in deltas {
        check_window(delta, h, "cutoff scale")?;
        let cutoff = TimeCutoff::new(delta)?;
        let mut best: f64 = 0.0;
        for (u, &src) in family.iter().zip(&sources) {
            if src == 0.0 {
                continue;
            }
            let cut = apply_cutoff(fft, &cutoff, u);
            best = best.max(lemma_norm(fft, params, &cut, lemma.norm, lemma.s, lemma.b)? / src);
        }
        ratios.push(best);
    }
    let series: Vec<(f64, f64)> = deltas.iter().copied().zip(ratios.iter().copied()).collect();
    let fit = fit_exponent(&series)?;
    let tail: Vec<(f64, f64)> = series.iter().copied().filter(|p| p.0 <= 0.125).collect();
    let tail_fit = if tail.len() >= 4 {
        Some(fit_exponent(&tail)?)
    } else {
        None
    };
    let gmean = powf(
        2.0,
        ratios.iter().map(|&r| log2(r)).sum::<f64>() / ratios.len() as f64,
    );
    let spread = ratios
        .iter()
        .map(|r| (r / gmean - 1.0).abs())
        .fold(0.0, f64::max);
    Ok(LemmaReport {
        lemma: *lemma,
        deltas: deltas.to_vec(),
        ratios,
        fit,
        tail_fit,
        spread,
    })
}

/// Windowed linear flows `ψ(t/T)W(t)u0`, one per width `T`.
pub fn windowed_family(
    fft: &dyn FftProvider,
    params: &DispersionParams,
    u0: &SpectralField,
    t_grid: SpatialGrid,
    widths: &[f64],
) -> Result<Vec<SpacetimeField>> {
    widths
        .iter()
        .map(|&w| {
            if w.is_nan() || w <= 0.0 || 2.0 * w >= t_grid.length() {
                bail!(Config, "window width {w} does not fit the time box");
            }
            check_window(w, t_grid.dx(), "window width")?;
            windowed_flow(fft, params, u0, t_grid, |t| bump(t / w))
        })
        .collect()
}

#[cfg(all(test, feature = "std"))]
mod tests {
    use super::*;
    use crate::dynamics::{evolve, gaussian, SolverConfig};
    use crate::fft::RustFft;

    fn p(a: f64) -> DispersionParams {
        DispersionParams::new(a).unwrap()
    }

    fn gauss_data(fft: &RustFft, params: &DispersionParams, size: f64) -> SpectralField {
        let grid = SpatialGrid::new(128, 32.0).unwrap();
        let g = SpectralField::from_fn(fft, grid, |x| gaussian(x, 1.0, 1.0));
        let f = norm_f(fft, params, &g, params.s_star).unwrap();
        g.scaled(size / f)
    }

    fn coeffs_at(fft: &RustFft, v: &SpacetimeField, m: usize) -> SpectralField {
        let data = v.to_spatial_coeffs_in_time(fft);
        let nt = v.nt();
        SpectralField::from_coeffs(v.xi_grid, (0..v.nx()).map(|i| data[i * nt + m]).collect())
            .unwrap()
    }

    #[test]
    fn cutoff_is_identity_where_psi_is_one() {
        let fft = RustFft::new();
        let xg = SpatialGrid::new(8, 2.0 * core::f64::consts::PI).unwrap();
        let tg = SpatialGrid::new(256, 4.0).unwrap();
        let u0 = SpectralField::from_fn(&fft, xg, |x| x.cos());
        let u = windowed_flow(&fft, &p(0.5), &u0, tg, |t| bump(2.0 * t)).unwrap();
        let cut = apply_cutoff(&fft, &TimeCutoff::new(1.0).unwrap(), &u);
        let diff = cut.sub(&u).max_abs();
        assert!(diff < 1e-10 * u.max_abs(), "{diff}");

        let zero = SpacetimeField::zeros(xg, tg);
        assert_eq!(
            apply_cutoff(&fft, &TimeCutoff::new(0.3).unwrap(), &zero).max_abs(),
            0.0
        );

        let wide = windowed_flow(&fft, &p(0.5), &u0, tg, |t| bump(t / 1.5)).unwrap();
        for delta in [1.0, 0.5, 0.125] {
            let c = apply_cutoff(&fft, &TimeCutoff::new(delta).unwrap(), &wide);
            assert!(c.l2_norm_sq() <= wide.l2_norm_sq() * (1.0 + 1e-12));
        }
        assert!(TimeCutoff::new(0.0).is_err());
        assert!(TimeCutoff::new(1.5).is_err());
    }

    #[test]
    fn zero_iterate_gives_windowed_linear_flow() {
        let fft = RustFft::new();
        let params = p(0.5);
        let u0 = gauss_data(&fft, &params, 0.5);
        let cut = TimeCutoff::new(0.25).unwrap();
        let tg = PicardSetup::new(&params).t_grid(&cut).unwrap();
        let zero = SpacetimeField::zeros(u0.grid, tg);
        let phi = duhamel_map(&fft, &params, &cut, &u0, &zero).unwrap();
        let lin = windowed_flow(&fft, &params, &u0, tg, |t| cut.psi(t)).unwrap();
        assert!(phi.sub(&lin).max_abs() <= 1e-14 * lin.max_abs());

        let none = SpectralField::zeros(u0.grid);
        assert_eq!(
            duhamel_map(&fft, &params, &cut, &none, &zero)
                .unwrap()
                .max_abs(),
            0.0
        );
    }

    #[test]
    fn duhamel_map_matches_its_differential_form() {
        let fft = RustFft::new();
        let params = p(0.5);
        let u0 = gauss_data(&fft, &params, 1.0);
        let cut = TimeCutoff::new(0.25).unwrap();
        let tg = PicardSetup::new(&params).t_grid(&cut).unwrap();
        let v = windowed_flow(&fft, &params, &u0, tg, |t| cut.psi(t)).unwrap();
        let phi = duhamel_map(&fft, &params, &cut, &u0, &v).unwrap();
        let res = duhamel_residual(&fft, &params, &cut, &v, &phi).unwrap();
        assert!(res < 1e-4, "{res}");
        // Φ(v) at t = 0 is the data.
        let at0 = coeffs_at(&fft, &phi, tg.len() / 2);
        assert!(at0.max_abs_diff(&u0) < 1e-12 * u0.max_abs());
    }

    #[test]
    fn coarse_time_grid_is_rejected() {
        let fft = RustFft::new();
        let params = p(0.5);
        let u0 = gauss_data(&fft, &params, 1.0);
        let cut = TimeCutoff::new(1.0).unwrap();
        let tg = SpatialGrid::new(16, 4.0).unwrap();
        let v = windowed_flow(&fft, &params, &u0, tg, |t| cut.psi(t)).unwrap();
        let err = duhamel_map(&fft, &params, &cut, &u0, &v).unwrap_err();
        assert!(matches!(err, Error::Resolution { .. }), "{err:?}");
    }

    #[test]
    fn zero_data_converges_immediately() {
        let fft = RustFft::new();
        let params = p(0.5);
        let u0 = SpectralField::zeros(SpatialGrid::new(64, 32.0).unwrap());
        let st = picard_iterate(
            &fft,
            &params,
            &TimeCutoff::new(0.25).unwrap(),
            &u0,
            &PicardSetup::new(&params),
        )
        .unwrap();
        assert!(st.converged && !st.diverged);
        assert_eq!(st.k, 0);
        assert_eq!(st.diffs, vec![0.0]);
    }

    #[test]
    fn small_data_contracts_and_matches_time_stepping() {
        let fft = RustFft::new();
        let params = p(0.5);
        let u0 = gauss_data(&fft, &params, 0.05);
        let cut = TimeCutoff::new(0.25).unwrap();
        let mut setup = PicardSetup::new(&params);
        setup.c_ball = linear_constant(&fft, &params, &cut, &u0, &setup).unwrap();
        let st = picard_iterate(&fft, &params, &cut, &u0, &setup).unwrap();
        assert!(st.converged && !st.diverged);
        assert!(st.diffs.len() >= 2);
        assert!(st.max_ratio() <= 0.5, "{:?}", st.ratios());
        assert!(st.norms.iter().all(|&n| n <= st.a_ball));

        let res = fixed_point_residual(&fft, &params, &cut, &u0, &st.v).unwrap();
        assert!(res < 1e-4, "{res}");
        let phi = duhamel_map(&fft, &params, &cut, &u0, &st.v).unwrap();
        assert!(duhamel_residual(&fft, &params, &cut, &st.v, &phi).unwrap() < 1e-4);

        let tg = st.v.t_grid;
        let m = (tg.len() / 2..tg.len())
            .rev()
            .find(|&m| tg.x(m) < 0.125)
            .unwrap();
        let traj = evolve(&fft, &SolverConfig::new(params, 1e-3, tg.x(m)), &u0).unwrap();
        let stepped = traj.last();
        let rel = sqrt(coeffs_at(&fft, &st.v, m).sub(stepped).l2_norm_sq() / stepped.l2_norm_sq());
        assert!(rel < 1e-3, "{rel}");
    }

    #[test]
    fn leaving_the_ball_sets_the_divergence_flag() {
        let fft = RustFft::new();
        let params = p(0.5);
        let u0 = gauss_data(&fft, &params, 0.5);
        let mut setup = PicardSetup::new(&params);
        setup.c_ball = 0.1;
        let st =
            picard_iterate(&fft, &params, &TimeCutoff::new(0.25).unwrap(), &u0, &setup).unwrap();
        assert!(st.diverged && !st.converged);
        let err = solution_map_continuity(
            &fft,
            &params,
            &TimeCutoff::new(0.25).unwrap(),
            &u0,
            &u0,
            &[1e-3],
            &setup,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Divergence { .. }));
    }

    #[test]
    fn higher_regularity_keeps_the_same_delta() {
        let fft = RustFft::new();
        let params = p(0.5);
        let u0 = gauss_data(&fft, &params, 0.5);
        let cut = TimeCutoff::new(0.25).unwrap();
        for s in [params.s_star, params.s_star + 1.0] {
            let mut setup = PicardSetup::new(&params);
            setup.s = s;
            setup.c_ball = linear_constant(&fft, &params, &cut, &u0, &setup).unwrap();
            let st = picard_iterate(&fft, &params, &cut, &u0, &setup).unwrap();
            assert!(st.converged, "s = {s}: {:?}", st.diffs);
        }
    }

    #[test]
    fn solution_map_is_locally_lipschitz() {
        let fft = RustFft::new();
        let params = p(0.5);
        let u0 = gauss_data(&fft, &params, 0.5);
        let cut = TimeCutoff::new(0.25).unwrap();
        let mut setup = PicardSetup::new(&params);
        setup.c_ball = linear_constant(&fft, &params, &cut, &u0, &setup).unwrap();
        let dir = SpectralField::from_fn(&fft, u0.grid, |x| gaussian(x - 1.0, 1.0, 0.7));
        let rep =
            solution_map_continuity(&fft, &params, &cut, &u0, &dir, &[1e-2, 1e-3, 1e-4], &setup)
                .unwrap();
        assert!(rep.spread < 0.2, "{rep:?}");
        let zero = solution_map_continuity(&fft, &params, &cut, &u0, &dir, &[0.0], &setup).unwrap();
        assert_eq!(zero.solution_diffs, vec![0.0]);
        assert!(solution_map_continuity(&fft, &params, &cut, &u0, &dir, &[], &setup).is_err());
    }

    #[test]
    fn delta_rule_picks_the_largest_admissible_scale() {
        let d = select_delta(1.0, 0.2, 1.0).unwrap();
        assert_eq!(d, powf(2.0, -11.0));
        assert_eq!(select_delta(0.1, 0.5, 1.0).unwrap(), 1.0);
        assert!(select_delta(1.0, 0.0, 1.0).is_err());
        let (c, th, a) = (3.0, 0.3, 0.7);
        let d = select_delta(c, th, a).unwrap();
        assert!(c * powf(d, th / 2.0) * a < 0.5);
        assert!(c * powf(2.0 * d, th / 2.0) * a >= 0.5);
    }

    #[test]
    fn contraction_factor_shrinks_with_delta() {
        let fft = RustFft::new();
        let params = p(0.5);
        let u0 = gauss_data(&fft, &params, 0.5);
        let setup = PicardSetup::new(&params);
        let sweep =
            contraction_sweep(&fft, &params, &u0, &setup, &[0.5, 0.25, 0.125, 0.0625]).unwrap();
        assert!(sweep.fit.slope > 0.0, "{sweep:?}");
    }

    #[test]
    fn tilde_x_cutoff_is_flat_below_one_half() {
        let fft = RustFft::new();
        let params = p(0.5);
        let xg = SpatialGrid::new(16, 2.0 * core::f64::consts::PI).unwrap();
        let u0 = SpectralField::from_fn(&fft, xg, |x| x.cos() + 0.5 * (2.0 * x).sin());
        let tg = SpatialGrid::new(8192, 8.0).unwrap();
        let widths: Vec<f64> = (-1..=7).map(|k| powf(2.0, -(k as f64))).collect();
        let family = windowed_family(&fft, &params, &u0, tg, &widths).unwrap();
        let deltas: Vec<f64> = (0..=6).map(|k| powf(2.0, -(k as f64))).collect();
        let lemma = CutoffLemma {
            norm: LemmaNorm::TildeX,
            s: 0.0,
            b: 0.4,
            b_source: 0.4,
        };
        let rep = cutoff_lemma_sweep(&fft, &params, &family, &lemma, &deltas).unwrap();
        assert!(rep.spread <= 0.1, "{rep:?}");
        assert!(rep.ratios.iter().all(|&r| r >= 1.0 - 1e-12));
    }

    #[test]
    fn lemma_sweep_rejects_bad_inputs() {
        let fft = RustFft::new();
        let params = p(0.5);
        let xg = SpatialGrid::new(8, 2.0 * core::f64::consts::PI).unwrap();
        let tg = SpatialGrid::new(512, 8.0).unwrap();
        let lemma = CutoffLemma {
            norm: LemmaNorm::X,
            s: 0.0,
            b: 0.4,
            b_source: 0.5,
        };
        let zero = vec![SpacetimeField::zeros(xg, tg)];
        let err = cutoff_lemma_sweep(&fft, &params, &zero, &lemma, &[1.0, 0.5]).unwrap_err();
        assert!(matches!(err, Error::Degenerate(_)));
        let u0 = SpectralField::from_fn(&fft, xg, |x| x.cos());
        let fam = windowed_family(&fft, &params, &u0, tg, &[1.0]).unwrap();
        assert!(cutoff_lemma_sweep(&fft, &params, &fam, &lemma, &[0.3]).is_err());
        assert!(cutoff_lemma_sweep(&fft, &params, &fam, &lemma, &[]).is_err());
        let err = cutoff_lemma_sweep(&fft, &params, &fam, &lemma, &[powf(2.0, -10.0)]).unwrap_err();
        assert!(matches!(err, Error::Resolution { .. }));
        assert!(windowed_family(&fft, &params, &u0, tg, &[4.0]).is_err());
    }
}
