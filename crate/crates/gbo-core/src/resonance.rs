//! Resonance function and the frequency-interaction bounds built on it.

use alloc::vec::Vec;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{bail, Result};
use crate::math::powf;
use crate::params::{BWindow, DispersionParams};
use crate::spectral::{omega, omega_prime};

/// `Ω(ξ₁, ξ₂) = ω(ξ₁+ξ₂) − ω(ξ₁) − ω(ξ₂)`.
pub fn resonance_fn(params: &DispersionParams, xi1: f64, xi2: f64) -> f64 {
    // Grouping the pair keeps the result bitwise symmetric.
    omega(params, xi1 + xi2) - (omega(params, xi1) + omega(params, xi2))
}

/// `|ω′(ξ₁) − ω′(ξ₂)|`.
pub fn jacobian(params: &DispersionParams, xi1: f64, xi2: f64) -> f64 {
    (omega_prime(params, xi1) - omega_prime(params, xi2)).abs()
}

/// Derivative in `ξ₂` of `ω(ξ₂) − ω(ξ₁+ξ₂)`, the phase whose level sets
/// are measured by [`levelset_measure`].
pub fn level_derivative(params: &DispersionParams, xi1: f64, xi2: f64) -> f64 {
    omega_prime(params, xi2) - omega_prime(params, xi1 + xi2)
}

/// Interpolated admissible window for `b`.
pub fn admissible_b(params: &DispersionParams) -> BWindow {
    params.b_window()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    SameSign,
    OppositeSign,
}

/// A frequency pair with its region tags. Comparisons are closed, so a
/// pair on a boundary carries both adjacent tags.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyPair {
    pub xi1: f64,
    pub xi2: f64,
}

impl FrequencyPair {
    pub fn new(xi1: f64, xi2: f64) -> Self {
        Self { xi1, xi2 }
    }

    pub fn same_sign(&self) -> bool {
        self.xi1 * self.xi2 >= 0.0
    }

    pub fn opposite_sign(&self) -> bool {
        self.xi1 * self.xi2 <= 0.0
    }

    /// `|ξ₁|/4 ≤ |ξ₂| ≤ |ξ₁|`.
    pub fn comparable(&self) -> bool {
        let (a1, a2) = (self.xi1.abs(), self.xi2.abs());
        a1 / 4.0 <= a2 && a2 <= a1
    }

    /// `|ξ₂| ≤ |ξ₁|/4`.
    pub fn low_high(&self) -> bool {
        self.xi2.abs() <= self.xi1.abs() / 4.0
    }

    pub fn branch(&self) -> Branch {
        if self.same_sign() {
            Branch::SameSign
        } else {
            Branch::OppositeSign
        }
    }
}

/// Right side of the lower bound on `|Ω|` for the pair's branch, without the
/// constant: `|ξ₁|^{2+a}` or `|ξ₁|^{1+a}|ξ₁+ξ₂|`.
pub fn branch_scale(params: &DispersionParams, pair: &FrequencyPair, branch: Branch) -> f64 {
    let a1 = pair.xi1.abs();
    match branch {
        Branch::SameSign => powf(a1, 2.0 + params.a),
        Branch::OppositeSign => powf(a1, 1.0 + params.a) * (pair.xi1 + pair.xi2).abs(),
    }
}

/// Constants for both branches, set to `safety` times the minimum of
/// `|Ω|/scale` over a closed grid in `β = ξ₂/ξ₁` (`Ω` is homogeneous of
/// degree `2+a`, so `ξ₁ = 1` loses nothing).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchConstants {
    pub same_sign: f64,
    pub opposite_sign: f64,
}

impl BranchConstants {
    pub fn get(&self, branch: Branch) -> f64 {
        match branch {
            Branch::SameSign => self.same_sign,
            Branch::OppositeSign => self.opposite_sign,
        }
    }
}

pub fn brute_force_constants(
    params: &DispersionParams,
    points: usize,
    safety: f64,
) -> BranchConstants {
    let mut same = f64::INFINITY;
    let mut opp = f64::INFINITY;
    // Closed grid on [1/4, 1]: both branches attain their minima at β = ±1/4.
    let last = points.max(2) - 1;
    for k in 0..=last {
        let t = 0.25 + 0.75 * k as f64 / last as f64;
        for (beta, slot) in [(t, &mut same), (-t, &mut opp)] {
            let pair = FrequencyPair::new(1.0, beta);
            let scale = branch_scale(params, &pair, pair.branch());
            if scale > 0.0 {
                *slot = slot.min(resonance_fn(params, 1.0, beta).abs() / scale);
            }
        }
    }
    BranchConstants {
        same_sign: safety * same,
        opposite_sign: safety * opp,
    }
}

/// `f(β) = (1+β)^{2+a} − 1 − β^{2+a}`, the same-sign ratio at `ξ₁ = 1`.
pub fn same_sign_profile(params: &DispersionParams, beta: f64) -> f64 {
    powf(1.0 + beta, 2.0 + params.a) - 1.0 - powf(beta, 2.0 + params.a)
}

/// Per-branch outcome of a lower-bound check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchReport {
    pub a: f64,
    pub branch: Branch,
    /// Constant the samples were checked against.
    pub c_bound: f64,
    /// Smallest `|Ω|/scale` seen, i.e. the largest constant the samples allow.
    pub c_empirical: f64,
    pub n_samples: usize,
    /// Samples where both sides vanish (the ray `ξ₂ = −ξ₁`).
    pub degenerate: usize,
    pub worst_sample: Option<FrequencyPair>,
    pub violations: Vec<FrequencyPair>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundReport {
    pub same_sign: BranchReport,
    pub opposite_sign: BranchReport,
}

impl LowerBoundReport {
    pub fn violations(&self) -> usize {
        self.same_sign.violations.len() + self.opposite_sign.violations.len()
    }
}

/// Check `|Ω| ≥ c·scale` on samples from the comparable region. A pair on
/// the sign boundary is checked against both branches.
pub fn lower_bound_check(
    params: &DispersionParams,
    samples: &[FrequencyPair],
    constants: &BranchConstants,
) -> Result<LowerBoundReport> {
    let blank = |branch| BranchReport {
        a: params.a,
        branch,
        c_bound: constants.get(branch),
        c_empirical: f64::INFINITY,
        n_samples: 0,
        degenerate: 0,
        worst_sample: None,
        violations: Vec::new(),
    };
    let mut same = blank(Branch::SameSign);
    let mut opp = blank(Branch::OppositeSign);
    for pair in samples {
        if !pair.comparable() {
            bail!(
                Region,
                "pair ({}, {}) lies outside |xi1|/4 <= |xi2| <= |xi1|",
                pair.xi1,
                pair.xi2
            );
        }
        let omega_abs = resonance_fn(params, pair.xi1, pair.xi2).abs();
        for (active, report) in [
            (pair.same_sign(), &mut same),
            (pair.opposite_sign(), &mut opp),
        ] {
            if !active {
                continue;
            }
            report.n_samples += 1;
            let scale = branch_scale(params, pair, report.branch);
            if scale == 0.0 {
                report.degenerate += 1;
                continue;
            }
            let ratio = omega_abs / scale;
            if ratio < report.c_empirical {
                report.c_empirical = ratio;
                report.worst_sample = Some(*pair);
            }
            if ratio < report.c_bound {
                report.violations.push(*pair);
            }
        }
    }
    Ok(LowerBoundReport {
        same_sign: same,
        opposite_sign: opp,
    })
}

/// Uniform draws from the comparable region: `|ξ₁|` log-uniform over
/// `[2^lo, 2^hi]`, `|ξ₂|/|ξ₁|` uniform over `[1/4, 1]`, independent signs.
pub fn sample_comparable<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    lo: f64,
    hi: f64,
) -> Vec<FrequencyPair> {
    (0..n)
        .map(|_| {
            let m = powf(2.0, rng.random_range(lo..=hi));
            let beta = rng.random_range(0.25..=1.0);
            let s1 = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            let s2 = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            FrequencyPair::new(s1 * m, s2 * beta * m)
        })
        .collect()
}

/// `min |J|/|ξ₁|^{1+a}` over `|ξ₂| ≤ |ξ₁|/4` by a grid scan at `ξ₁ = 1`.
pub fn jacobian_constant(params: &DispersionParams, points: usize) -> f64 {
    (0..=points)
        .map(|k| {
            let beta = -0.25 + 0.5 * k as f64 / points as f64;
            jacobian(params, 1.0, beta)
        })
        .fold(f64::INFINITY, f64::min)
}

/// `min |f′(ξ₂)|/|ξ₁|^{1+a}` over `|ξ₂| ≤ |ξ₁|/4` at `ξ₁ = 1`.
pub fn level_derivative_constant(params: &DispersionParams, points: usize) -> f64 {
    (0..=points)
        .map(|k| {
            let beta = -0.25 + 0.5 * k as f64 / points as f64;
            level_derivative(params, 1.0, beta).abs()
        })
        .fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelSet {
    /// Measure of `{|ξ₂| ≤ |ξ₁|/4 : 2^{j−1} ≤ |h(ξ₂)| ≤ 2^{j+1}}`.
    pub measured: f64,
    /// `2^j·2^{−m₁(1+a)}`.
    pub scale: f64,
    /// `measured / scale`.
    pub c_empirical: f64,
    /// The scale exceeds the scanned interval, so the bound says nothing.
    pub out_of_regime: bool,
}

fn level_setup(
    params: &DispersionParams,
    xi1: f64,
    theta1: f64,
    theta2: f64,
    j: i32,
    m1: i32,
) -> Result<(f64, f64, f64, f64)> {
    if !(xi1.is_finite() && theta1.is_finite() && theta2.is_finite()) || xi1 == 0.0 {
        bail!(Config, "level-set scan needs finite inputs and xi1 != 0");
    }
    let half = xi1.abs() / 4.0;
    let scale = powf(2.0, j as f64) * powf(2.0, -(m1 as f64) * (1.0 + params.a));
    let base = theta1 + theta2 + omega(params, xi1);
    Ok((half, scale, base, powf(2.0, j as f64)))
}

fn level_set(measured: f64, scale: f64, width: f64) -> LevelSet {
    LevelSet {
        measured,
        scale,
        c_empirical: measured / scale,
        out_of_regime: scale >= width,
    }
}

/// Measure of the level set `{|ξ₂| ≤ |ξ₁|/4 : 2^{j−1} ≤ |h(ξ₂)| ≤ 2^{j+1}}`
/// of `h(ξ₂) = θ₁ + θ₂ + ω(ξ₁) + ω(ξ₂) − ω(ξ₁+ξ₂)`.
///
/// `h` is strictly monotone on the interval, so each of the two bands has
/// an interval preimage whose ends are found by bisection.
pub fn levelset_measure(
    params: &DispersionParams,
    xi1: f64,
    theta1: f64,
    theta2: f64,
    j: i32,
    m1: i32,
) -> Result<LevelSet> {
    let (half, scale, base, two_j) = level_setup(params, xi1, theta1, theta2, j, m1)?;
    let h = |x: f64| base + omega(params, x) - omega(params, xi1 + x);
    let (h_lo, h_hi) = (h(-half), h(half));
    let increasing = h_hi >= h_lo;
    // Clamped inverse: the point where h crosses y, or an interval end.
    let inverse = |y: f64| -> f64 {
        let (below, above) = if increasing {
            (h_lo, h_hi)
        } else {
            (h_hi, h_lo)
        };
        if y <= below {
            return if increasing { -half } else { half };
        }
        if y >= above {
            return if increasing { half } else { -half };
        }
        let (mut l, mut r) = (-half, half);
        for _ in 0..200 {
            let mid = 0.5 * (l + r);
            if (h(mid) < y) == increasing {
                l = mid;
            } else {
                r = mid;
            }
        }
        0.5 * (l + r)
    };
    let (lo, hi) = (two_j / 2.0, 2.0 * two_j);
    let band = |p: f64, q: f64| (inverse(q) - inverse(p)).abs();
    let measured = band(lo, hi) + band(-hi, -lo);
    Ok(level_set(measured, scale, 2.0 * half))
}

/// Grid-scan version of [`levelset_measure`] with `samples` midpoints; an
/// independent check that assumes nothing about monotonicity.
pub fn levelset_measure_scan(
    params: &DispersionParams,
    xi1: f64,
    theta1: f64,
    theta2: f64,
    j: i32,
    m1: i32,
    samples: usize,
) -> Result<LevelSet> {
    let (half, scale, base, two_j) = level_setup(params, xi1, theta1, theta2, j, m1)?;
    let step = 2.0 * half / samples as f64;
    let (lo, hi) = (two_j / 2.0, 2.0 * two_j);
    let count = (0..samples)
        .filter(|&k| {
            let x = -half + (k as f64 + 0.5) * step;
            let v = (base + omega(params, x) - omega(params, xi1 + x)).abs();
            v >= lo && v <= hi
        })
        .count();
    Ok(level_set(count as f64 * step, scale, 2.0 * half))
}

/// Sup over a grid of `|Ω − 3ξ₁ξ₂(ξ₁+ξ₂)|` at `a = 1`, relative to the
/// magnitude of the closed form.
pub fn cubic_closed_form_error(points: usize, extent: f64) -> Result<f64> {
    let params = DispersionParams::new(1.0)?;
    let mut worst: f64 = 0.0;
    for p in 0..points {
        for q in 0..points {
            let x1 = -extent + 2.0 * extent * p as f64 / (points - 1) as f64;
            let x2 = -extent + 2.0 * extent * q as f64 / (points - 1) as f64;
            let same = (x1 >= 0.0 && x2 >= 0.0) || (x1 <= 0.0 && x2 <= 0.0);
            if !same {
                continue;
            }
            let exact = 3.0 * x1 * x2 * (x1 + x2);
            let err = (resonance_fn(&params, x1, x2) - exact).abs() / exact.abs().max(1.0);
            worst = worst.max(err);
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn p(a: f64) -> DispersionParams {
        DispersionParams::new(a).unwrap()
    }

    #[test]
    fn worked_values() {
        assert!((resonance_fn(&p(1.0), 1.0, 1.0) - 6.0).abs() < 1e-14);
        assert_eq!(resonance_fn(&p(0.5), 3.0, 0.0), 0.0);
        assert!((resonance_fn(&p(0.0), 1.0, 0.25) - 0.5).abs() < 1e-14);
        assert_eq!(jacobian(&p(0.3), 2.0, 2.0), 0.0);
        assert!((jacobian(&p(1.0), 2.0, 1.0) - 9.0).abs() < 1e-12);
    }

    #[test]
    fn symmetry_and_oddness() {
        let mut rng = seeded(11);
        for _ in 0..1000 {
            let a = rng.random_range(0.0..=1.0);
            let (x, y) = (rng.random_range(-50.0..50.0), rng.random_range(-50.0..50.0));
            let pr = p(a);
            assert_eq!(resonance_fn(&pr, x, y), resonance_fn(&pr, y, x));
            let s = resonance_fn(&pr, x, y);
            assert!((resonance_fn(&pr, -x, -y) + s).abs() <= 1e-12 * s.abs().max(1.0));
        }
    }

    #[test]
    fn cubic_closed_form() {
        assert!(cubic_closed_form_error(201, 10.0).unwrap() < 1e-12);
    }

    #[test]
    fn same_sign_constant_is_the_endpoint_value() {
        for a in [0.0, 0.3, 0.5, 1.0] {
            let pr = p(a);
            let c = brute_force_constants(&pr, 1000, 1.0);
            assert!((c.same_sign - same_sign_profile(&pr, 0.25)).abs() < 1e-12);
        }
        assert!((same_sign_profile(&p(0.0), 0.25) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn degenerate_ray_is_not_a_violation() {
        let pr = p(0.5);
        let c = brute_force_constants(&pr, 1000, 0.9);
        let r = lower_bound_check(&pr, &[FrequencyPair::new(3.0, -3.0)], &c).unwrap();
        assert_eq!(r.violations(), 0);
        assert_eq!(r.opposite_sign.degenerate, 1);
    }

    #[test]
    fn region_is_enforced() {
        let pr = p(0.5);
        let c = brute_force_constants(&pr, 100, 0.9);
        let err = lower_bound_check(&pr, &[FrequencyPair::new(1.0, 0.1)], &c);
        assert!(matches!(err, Err(crate::Error::Region(_))));
        // Closed endpoints are inside.
        assert!(lower_bound_check(
            &pr,
            &[FrequencyPair::new(1.0, 0.25), FrequencyPair::new(1.0, -1.0)],
            &c
        )
        .is_ok());
    }

    #[test]
    fn random_samples_respect_brute_force_constants() {
        let pr = p(0.5);
        let c = brute_force_constants(&pr, 1000, 0.9);
        let samples = sample_comparable(&mut seeded(5), 20_000, -4.0, 8.0);
        let r = lower_bound_check(&pr, &samples, &c).unwrap();
        assert_eq!(r.violations(), 0);
        assert!(r.same_sign.c_empirical >= c.same_sign);
    }

    #[test]
    fn jacobian_and_level_constants() {
        for a in [0.0, 0.5, 1.0] {
            let pr = p(a);
            let kj = jacobian_constant(&pr, 1000);
            assert!((kj - (2.0 + a) * (1.0 - powf(0.25, 1.0 + a))).abs() < 1e-12);
            let kl = level_derivative_constant(&pr, 1000);
            assert!(kl > 0.0);
        }
    }

    #[test]
    fn level_set_bound() {
        let pr = p(0.5);
        let mut rng = seeded(9);
        for _ in 0..100 {
            let xi1 = powf(2.0, 8.0) * rng.random_range(1.0..2.0);
            let (t1, t2) = (rng.random_range(-1e3..1e3), rng.random_range(-1e3..1e3));
            let l = levelset_measure(&pr, xi1, t1, t2, 3, 8).unwrap();
            assert!(l.measured <= 4.0 * l.scale, "C = {}", l.c_empirical);
        }
        for (xi1, t, j, m1) in [(20.0, 3.0, 2, 4), (-37.0, -50.0, 4, 5), (300.0, 17.0, 3, 8)] {
            let exact = levelset_measure(&pr, xi1, t, 0.0, j, m1).unwrap();
            let scan = levelset_measure_scan(&pr, xi1, t, 0.0, j, m1, 1 << 22).unwrap();
            let step = xi1.abs() / 2.0 / (1 << 22) as f64;
            assert!(exact.measured > 0.0);
            assert!((exact.measured - scan.measured).abs() <= 4.0 * step);
        }
        let huge = levelset_measure(&pr, 256.0, 0.0, 0.0, 40, 8).unwrap();
        assert!(huge.out_of_regime);
        assert!(huge.measured <= 128.0);
    }

    #[test]
    fn admissible_windows() {
        assert!(admissible_b(&p(0.0)).empty);
        let w = admissible_b(&p(0.5));
        assert!((w.lo - 0.35).abs() < 1e-12 && (w.hi - 0.5).abs() < 1e-12);
        let w = admissible_b(&p(1.0));
        assert!((w.lo - 1.0 / 3.0).abs() < 1e-12);
        for k in 1..100 {
            assert!(!admissible_b(&p(k as f64 / 100.0)).empty);
        }
    }
}
