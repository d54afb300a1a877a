//! Nonlinear evolution, conserved integrals and the dilation symmetry.

use alloc::vec::Vec;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{bail, Error, Result};
use crate::fft::FftProvider;
use crate::math::{ceil, cis, exp, kahan_sum, powf, sqrt, PI};
use crate::params::DispersionParams;
use crate::spectral::{omega, SpectralField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Integrating-factor (Lawson) RK4.
    IfRk4,
    /// Exponential time-differencing RK4 with contour-integral coefficients.
    Etdrk4,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub params: DispersionParams,
    pub dt: f64,
    pub t_end: f64,
    /// Fraction of the half-spectrum kept by dealiasing; 2/3 is Orszag's rule.
    pub dealias_fraction: f64,
    pub scheme: Scheme,
    /// Switch off the quadratic term to recover the linear flow.
    pub nonlinear: bool,
    /// Keep every `snapshot_every`-th step; the final state is always kept.
    pub snapshot_every: usize,
}

impl SolverConfig {
    pub fn new(params: DispersionParams, dt: f64, t_end: f64) -> Self {
        Self {
            params,
            dt,
            t_end,
            dealias_fraction: 2.0 / 3.0,
            scheme: Scheme::IfRk4,
            nonlinear: true,
            snapshot_every: usize::MAX,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            bail!(Config, "dt must be positive, got {}", self.dt);
        }
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            bail!(Config, "t_end must be nonnegative, got {}", self.t_end);
        }
        if !(self.dealias_fraction > 0.0 && self.dealias_fraction <= 1.0) {
            bail!(
                Config,
                "dealias fraction must lie in (0, 1], got {}",
                self.dealias_fraction
            );
        }
        if self.snapshot_every == 0 {
            bail!(Config, "snapshot_every must be at least 1");
        }
        Ok(())
    }

    /// Step count and the step actually used so that the run ends on `t_end`.
    pub fn steps(&self) -> (usize, f64) {
        if self.t_end == 0.0 {
            return (0, self.dt);
        }
        let n = ceil(self.t_end / self.dt - 1e-9).max(1.0) as usize;
        (n, self.t_end / n as f64)
    }
}

/// `I1 = ∫u`, `I2 = ∫u²`, `I3 = cubic + dispersive` with
/// `cubic = (1/6)∫u³` and `dispersive = ∫|D^{(1+a)/2}u|²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConservedTriple {
    pub i1: f64,
    pub i2: f64,
    pub i3: f64,
    pub cubic: f64,
    pub dispersive: f64,
}

impl ConservedTriple {
    /// `½∫|D^{(1+a)/2}u|² + (1/6)∫u³`, the Hamiltonian of the flow.
    pub fn hamiltonian(&self) -> f64 {
        0.5 * self.dispersive + self.cubic
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub snapshots: Vec<(f64, SpectralField)>,
    pub steps: usize,
    pub dt: f64,
}

impl Trajectory {
    pub fn last(&self) -> &SpectralField {
        &self
            .snapshots
            .last()
            .expect("trajectory holds the initial state")
            .1
    }
}

fn keep_mask(u: &SpectralField, fraction: f64) -> Vec<bool> {
    let cutoff = fraction * (u.grid.len() / 2) as f64;
    (0..u.grid.len())
        .map(|i| (u.grid.wavenumber(i).abs() as f64) < cutoff)
        .collect()
}

fn check_real(u: &SpectralField) -> Result<()> {
    let tol = 1e-9 * u.max_abs().max(1e-300);
    let asym = u.conjugate_asymmetry();
    if asym > tol {
        bail!(
            Contract,
            "field is not conjugate-symmetric (defect {asym:.3e})"
        );
    }
    Ok(())
}

pub(crate) struct Nonlinearity<'a> {
    fft: &'a dyn FftProvider,
    mask: Vec<bool>,
    half_i_xi: Vec<Complex64>,
    scale: f64,
}

impl<'a> Nonlinearity<'a> {
    pub(crate) fn new(
        fft: &'a dyn FftProvider,
        u: &SpectralField,
        fraction: f64,
        scale: f64,
    ) -> Self {
        let mask = keep_mask(u, fraction);
        let half_i_xi = (0..u.grid.len())
            .map(|i| Complex64::new(0.0, 0.5 * u.grid.xi(i)))
            .collect();
        Self {
            fft,
            mask,
            half_i_xi,
            scale,
        }
    }

    /// Transform of `−½∂x(u²)` with the square dealiased: `½iξ·F(u²)`.
    pub(crate) fn eval(
        &self,
        coeffs: &[Complex64],
        grid: &crate::grid::SpatialGrid,
    ) -> Vec<Complex64> {
        let n = coeffs.len();
        if self.scale == 0.0 {
            return alloc::vec![Complex64::new(0.0, 0.0); n];
        }
        let mut buf: Vec<Complex64> = coeffs
            .iter()
            .zip(&self.mask)
            .map(|(&c, &k)| if k { c } else { Complex64::new(0.0, 0.0) })
            .collect();
        crate::spectral::inverse_coeffs(self.fft, grid, &mut buf).expect("grid sized");
        for v in buf.iter_mut() {
            *v = Complex64::new(v.re * v.re, 0.0);
        }
        crate::spectral::forward_samples(self.fft, grid, &mut buf).expect("grid sized");
        for ((v, &keep), &w) in buf.iter_mut().zip(&self.mask).zip(&self.half_i_xi) {
            *v = if keep {
                *v * w * self.scale
            } else {
                Complex64::new(0.0, 0.0)
            };
        }
        buf
    }
}

/// `−∂x D^{1+a} u − ½∂x(u²)` in coefficient form, the square dealiased by
/// `dealias_fraction`.
pub fn rhs_with(
    fft: &dyn FftProvider,
    params: &DispersionParams,
    u: &SpectralField,
    dealias_fraction: f64,
    nonlinear: bool,
) -> Result<SpectralField> {
    check_real(u)?;
    let nl = Nonlinearity::new(fft, u, dealias_fraction, if nonlinear { 1.0 } else { 0.0 });
    let n_part = nl.eval(&u.coeffs, &u.grid);
    let nyq = u.grid.nyquist_slot();
    let coeffs = (0..u.grid.len())
        .map(|i| {
            if i == nyq {
                return Complex64::new(0.0, 0.0);
            }
            let lin = Complex64::new(0.0, omega(params, u.grid.xi(i))) * u.coeffs[i];
            lin + n_part[i]
        })
        .collect();
    SpectralField::from_coeffs(u.grid, coeffs)
}

/// Right side with the default 2/3 dealiasing.
pub fn rhs(
    fft: &dyn FftProvider,
    params: &DispersionParams,
    u: &SpectralField,
) -> Result<SpectralField> {
    rhs_with(fft, params, u, 2.0 / 3.0, true)
}

struct EtdCoeffs {
    e: Vec<Complex64>,
    e2: Vec<Complex64>,
    q: Vec<Complex64>,
    f1: Vec<Complex64>,
    f2: Vec<Complex64>,
    f3: Vec<Complex64>,
}

fn etd_coeffs(params: &DispersionParams, u: &SpectralField, h: f64) -> EtdCoeffs {
    const M: usize = 32;
    let n = u.grid.len();
    let mut c = EtdCoeffs {
        e: Vec::with_capacity(n),
        e2: Vec::with_capacity(n),
        q: Vec::with_capacity(n),
        f1: Vec::with_capacity(n),
        f2: Vec::with_capacity(n),
        f3: Vec::with_capacity(n),
    };
    let roots: Vec<Complex64> = (0..M)
        .map(|j| cis(2.0 * PI * (j as f64 + 0.5) / M as f64))
        .collect();
    for i in 0..n {
        let lh = Complex64::new(0.0, omega(params, u.grid.xi(i)) * h);
        c.e.push(lh.exp());
        c.e2.push((lh * 0.5).exp());
        let (mut q, mut f1, mut f2, mut f3) = (
            Complex64::default(),
            Complex64::default(),
            Complex64::default(),
            Complex64::default(),
        );
        for r in &roots {
            let z = lh + r;
            let ez = z.exp();
            let z3 = z * z * z;
            q += ((z * 0.5).exp() - 1.0) / z;
            f1 += (-4.0 - z + ez * (4.0 - 3.0 * z + z * z)) / z3;
            f2 += (2.0 + z + ez * (z - 2.0)) / z3;
            f3 += (-4.0 - 3.0 * z - z * z + ez * (4.0 - z)) / z3;
        }
        let w = h / M as f64;
        c.q.push(q * w);
        c.f1.push(f1 * w);
        c.f2.push(f2 * w);
        c.f3.push(f3 * w);
    }
    c
}

/// Integrate from `u0` to `t_end`. The linear part is exact in both schemes.
pub fn evolve(
    fft: &dyn FftProvider,
    config: &SolverConfig,
    u0: &SpectralField,
) -> Result<Trajectory> {
    config.validate()?;
    check_real(u0)?;
    let params = &config.params;
    let (steps, h) = config.steps();
    let grid = u0.grid;
    let n = grid.len();
    let nyq = grid.nyquist_slot();
    let mut u = u0.coeffs.clone();
    u[nyq] = Complex64::new(0.0, 0.0);
    let nl = Nonlinearity::new(
        fft,
        u0,
        config.dealias_fraction,
        if config.nonlinear { 1.0 } else { 0.0 },
    );
    let e_half: Vec<Complex64> = (0..n)
        .map(|i| {
            if i == nyq {
                Complex64::default()
            } else {
                cis(omega(params, grid.xi(i)) * h * 0.5)
            }
        })
        .collect();
    let etd = matches!(config.scheme, Scheme::Etdrk4).then(|| etd_coeffs(params, u0, h));
    let mass0 = sqrt(kahan_sum(u.iter().map(|c| c.norm_sqr())));
    let mut snapshots = Vec::new();
    snapshots.push((
        0.0,
        SpectralField {
            grid,
            coeffs: u.clone(),
        },
    ));
    for step in 1..=steps {
        u = match &etd {
            None => lawson_step(&nl, &grid, &u, &e_half, h),
            Some(c) => etd_step(&nl, &grid, &u, c),
        };
        let mass = sqrt(kahan_sum(u.iter().map(|c| c.norm_sqr())));
        let t = step as f64 * h;
        if !mass.is_finite() || (mass0 > 0.0 && mass > 10.0 * mass0) {
            return Err(Error::Divergence {
                step,
                t,
                growth: if mass0 > 0.0 {
                    mass / mass0
                } else {
                    f64::INFINITY
                },
            });
        }
        if step % config.snapshot_every == 0 || step == steps {
            snapshots.push((
                t,
                SpectralField {
                    grid,
                    coeffs: u.clone(),
                },
            ));
        }
    }
    Ok(Trajectory {
        snapshots,
        steps,
        dt: h,
    })
}

fn lawson_step(
    nl: &Nonlinearity<'_>,
    grid: &crate::grid::SpatialGrid,
    u: &[Complex64],
    e: &[Complex64],
    h: f64,
) -> Vec<Complex64> {
    let n = u.len();
    let a = nl.eval(u, grid);
    let u2: Vec<Complex64> = (0..n).map(|i| e[i] * (u[i] + a[i] * (h / 2.0))).collect();
    let b = nl.eval(&u2, grid);
    let u3: Vec<Complex64> = (0..n).map(|i| e[i] * u[i] + b[i] * (h / 2.0)).collect();
    let c = nl.eval(&u3, grid);
    let u4: Vec<Complex64> = (0..n)
        .map(|i| e[i] * e[i] * u[i] + e[i] * c[i] * h)
        .collect();
    let d = nl.eval(&u4, grid);
    (0..n)
        .map(|i| {
            let e2 = e[i] * e[i];
            e2 * u[i] + (e2 * a[i] + e[i] * (b[i] + c[i]) * 2.0 + d[i]) * (h / 6.0)
        })
        .collect()
}

fn etd_step(
    nl: &Nonlinearity<'_>,
    grid: &crate::grid::SpatialGrid,
    u: &[Complex64],
    c: &EtdCoeffs,
) -> Vec<Complex64> {
    let n = u.len();
    let nu = nl.eval(u, grid);
    let a: Vec<Complex64> = (0..n).map(|i| c.e2[i] * u[i] + c.q[i] * nu[i]).collect();
    let na = nl.eval(&a, grid);
    let b: Vec<Complex64> = (0..n).map(|i| c.e2[i] * u[i] + c.q[i] * na[i]).collect();
    let nb = nl.eval(&b, grid);
    let cc: Vec<Complex64> = (0..n)
        .map(|i| c.e2[i] * a[i] + c.q[i] * (nb[i] * 2.0 - nu[i]))
        .collect();
    let nc = nl.eval(&cc, grid);
    let nyq = grid.nyquist_slot();
    (0..n)
        .map(|i| {
            if i == nyq {
                return Complex64::default();
            }
            c.e[i] * u[i] + c.f1[i] * nu[i] + c.f2[i] * (na[i] + nb[i]) * 2.0 + c.f3[i] * nc[i]
        })
        .collect()
}

/// Quadrature of the three integrals over the torus.
pub fn conserved(
    fft: &dyn FftProvider,
    params: &DispersionParams,
    u: &SpectralField,
) -> ConservedTriple {
    let grid = u.grid;
    let i1 = u.coeffs[0].re;
    let i2 = u.l2_norm_sq();
    let samples = u.to_real(fft);
    let cubic = kahan_sum(samples.iter().map(|v| v * v * v)) * grid.dx() / 6.0;
    let dispersive = kahan_sum(
        u.coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| powf(grid.xi(i).abs(), 1.0 + params.a) * c.norm_sqr()),
    ) / grid.length();
    ConservedTriple {
        i1,
        i2,
        i3: cubic + dispersive,
        cubic,
        dispersive,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    /// `sup_t ‖u(t)‖_{H^{s*}} / ‖u0‖_{H^{s*}}`.
    pub sup_ratio: f64,
    /// Ratio bound implied by conservation of `I2` and the Hamiltonian.
    pub conservation_bound: f64,
    pub drift_i1: f64,
    pub drift_i2: f64,
    pub drift_i3: f64,
    pub drift_hamiltonian: f64,
}

fn rel(x: f64, x0: f64) -> f64 {
    if x0 == 0.0 {
        (x - x0).abs()
    } else {
        ((x - x0) / x0).abs()
    }
}

/// Energy-space growth along a trajectory and the drift of each integral.
///
/// `drift_i1` is absolute; the others are relative to the initial value
/// (absolute when that value is zero).
pub fn energy_bound_check(
    fft: &dyn FftProvider,
    params: &DispersionParams,
    trajectory: &Trajectory,
) -> EnergyReport {
    let u0 = &trajectory.snapshots[0].1;
    let h0 = u0.sobolev_norm(params.s_star);
    let c0 = conserved(fft, params, u0);
    let mut report = EnergyReport {
        sup_ratio: if h0 > 0.0 { 1.0 } else { 0.0 },
        conservation_bound: conservation_bound(params, u0, &c0),
        drift_i1: 0.0,
        drift_i2: 0.0,
        drift_i3: 0.0,
        drift_hamiltonian: 0.0,
    };
    for (_, u) in &trajectory.snapshots {
        if h0 > 0.0 {
            report.sup_ratio = report.sup_ratio.max(u.sobolev_norm(params.s_star) / h0);
        }
        let c = conserved(fft, params, u);
        report.drift_i1 = report.drift_i1.max((c.i1 - c0.i1).abs());
        report.drift_i2 = report.drift_i2.max(rel(c.i2, c0.i2));
        report.drift_i3 = report.drift_i3.max(rel(c.i3, c0.i3));
        report.drift_hamiltonian = report
            .drift_hamiltonian
            .max(rel(c.hamiltonian(), c0.hamiltonian()));
    }
    report
}

/// `Y ≤ (β + √(β² + 4γ))/2` for `Y = ‖u‖_{H^{s*}}`, where
/// `Y² ≤ 2^a (I2 + Q)`, `Q = 2H − (1/3)∫u³`, `|∫u³| ≤ ‖u‖_∞ I2` and
/// `‖u‖_∞ ≤ K·Y` on the grid. Returned relative to `‖u0‖_{H^{s*}}`.
fn conservation_bound(params: &DispersionParams, u0: &SpectralField, c0: &ConservedTriple) -> f64 {
    let h0 = u0.sobolev_norm(params.s_star);
    if h0 == 0.0 {
        return 0.0;
    }
    let grid = u0.grid;
    let s = kahan_sum((0..grid.len()).map(|i| powf(1.0 + grid.xi(i).abs(), -(1.0 + params.a))));
    let k = sqrt(s / grid.length());
    let two_a = powf(2.0, params.a);
    let beta = two_a * k * c0.i2 / 3.0;
    let gamma = two_a * (c0.i2 + 2.0 * c0.hamiltonian()).max(0.0);
    (beta + sqrt(beta * beta + 4.0 * gamma)) / 2.0 / h0
}

/// `u_σ(x) = σ^{1+a} u(σx)` by spectral stretching: the period shrinks by
/// `σ` and each coefficient is multiplied by `σ^a`.
pub fn scale_solution(
    params: &DispersionParams,
    u: &SpectralField,
    sigma: f64,
) -> Result<SpectralField> {
    let grid = u.grid.dilated(sigma)?;
    let k = powf(sigma, params.a);
    Ok(SpectralField {
        grid,
        coeffs: u.coeffs.iter().map(|c| c * k).collect(),
    })
}

/// Time matching the dilation: `t / σ^{2+a}`.
pub fn scaled_time(params: &DispersionParams, t: f64, sigma: f64) -> f64 {
    t / powf(sigma, 2.0 + params.a)
}

/// Observed convergence order from runs at `h`, `h/2`, `h/4`.
pub fn richardson_order(coarse: &SpectralField, mid: &SpectralField, fine: &SpectralField) -> f64 {
    let e1 = sqrt(coarse.sub(mid).l2_norm_sq());
    let e2 = sqrt(mid.sub(fine).l2_norm_sq());
    crate::math::log2(e1 / e2)
}

/// A Gaussian bump used as smooth, decaying data.
pub fn gaussian(x: f64, amplitude: f64, width: f64) -> f64 {
    amplitude * exp(-x * x / (2.0 * width * width))
}
