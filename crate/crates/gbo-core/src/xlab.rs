//! Wave-packet interaction experiments: both sides of the bilinear
//! estimates on thin packets hugging the dispersive surface, and exponent
//! fits over dyadic frequency sweeps.
//!
//! Packets have the form `û(ξ,λ) = A(ξ)·g(λ − ω(ξ))`. For large `N` the
//! surface reaches `λ ~ N^{2+a}` and no uniform `(ξ, λ)` grid can hold a
//! packet of width `N^{−1−a}`, so the product is evaluated in the adapted
//! coordinates `(ξ, μ = λ − ω(ξ))`:
//!
//! ```text
//! F(ξ, μ) = (2π)^{−2} ∫ A₁(ξ₁) A₂(ξ−ξ₁) G(μ + Ω(ξ₁, ξ−ξ₁)) dξ₁,   G = g₁ * g₂.
//! ```
//!
//! The `ξ₁` integral is pushed forward to `w = Ω` (monotone on every recipe
//! support) and correlated with `G` on a uniform `w` grid. On small grids
//! [`lhs_on_grid`] evaluates the same quantity with the literal discrete
//! convolution, which the tests compare against.

use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::bourgain::{norm_x, DyadicDecomposition, LayerMasses};
use crate::error::{bail, Error, Result};
use crate::fft::FftProvider;
use crate::grid::SpatialGrid;
use crate::math::{kahan_sum, log2, powf, sin, sqrt, PI};
use crate::params::DispersionParams;
use crate::spacetime::{convolve, SpacetimeField};
use crate::spectral::{omega, omega_prime};

/// Rising-plateau-falling profile on `[lo, hi]` with `sin²` ramps of width
/// `edge` inside each end.
fn plateau(x: f64, lo: f64, hi: f64, edge: f64) -> f64 {
    if x < lo || x > hi {
        return 0.0;
    }
    if edge <= 0.0 {
        return 1.0;
    }
    let d = (x - lo).min(hi - x);
    if d >= edge {
        1.0
    } else {
        let s = sin(0.5 * PI * d / edge);
        s * s
    }
}

fn plateau_deriv(x: f64, lo: f64, hi: f64, edge: f64) -> f64 {
    if x <= lo || x >= hi || edge <= 0.0 {
        return 0.0;
    }
    let k = 0.5 * PI / edge;
    if x - lo < edge {
        k * sin(PI * (x - lo) / edge)
    } else if hi - x < edge {
        -k * sin(PI * (hi - x) / edge)
    } else {
        0.0
    }
}

/// Midpoint rule with `n` nodes.
fn integrate(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> f64 {
    let h = (hi - lo) / n as f64;
    kahan_sum((0..n).map(|k| f(lo + (k as f64 + 0.5) * h))) * h
}

/// A smoothed indicator of `{ξ ∈ [xi_lo, xi_hi], |λ − ω(ξ)| ≤ width}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WavePacket {
    pub xi_lo: f64,
    pub xi_hi: f64,
    pub modulation_width: f64,
    /// Fraction of each support taken up by each edge ramp.
    pub taper: f64,
}

impl WavePacket {
    pub fn support_width(&self) -> f64 {
        self.xi_hi - self.xi_lo
    }

    pub fn amplitude(&self, xi: f64) -> f64 {
        plateau(
            xi,
            self.xi_lo,
            self.xi_hi,
            self.taper * self.support_width(),
        )
    }

    pub fn amplitude_deriv(&self, xi: f64) -> f64 {
        plateau_deriv(
            xi,
            self.xi_lo,
            self.xi_hi,
            self.taper * self.support_width(),
        )
    }

    pub fn profile(&self, mu: f64) -> f64 {
        let w = self.modulation_width;
        plateau(mu, -w, w, self.taper * 2.0 * w)
    }

    pub fn profile_deriv(&self, mu: f64) -> f64 {
        let w = self.modulation_width;
        plateau_deriv(mu, -w, w, self.taper * 2.0 * w)
    }

    /// `û(ξ, λ)`.
    pub fn spectral(&self, params: &DispersionParams, xi: f64, lambda: f64) -> f64 {
        let a = self.amplitude(xi);
        if a == 0.0 {
            0.0
        } else {
            a * self.profile(lambda - omega(params, xi))
        }
    }

    /// `‖u‖²_{L²}` in closed form: each `sin²` ramp of width `e` carries `3e/8`
    /// of `∫ profile²`.
    pub fn l2_norm_sq(&self) -> f64 {
        let k = 1.0 - 1.25 * self.taper;
        self.support_width() * k * 2.0 * self.modulation_width * k / (4.0 * PI * PI)
    }

    fn xi_integral(&self, f: impl Fn(f64) -> f64) -> f64 {
        integrate(f, self.xi_lo, self.xi_hi, 4000)
    }

    fn mu_integral(&self, f: impl Fn(f64) -> f64) -> f64 {
        let w = self.modulation_width;
        integrate(f, -w, w, 20_000)
    }

    fn layers(&self, xi_part: f64, mu_density: impl Fn(f64) -> f64) -> LayerMasses {
        let dec = DyadicDecomposition::covering(self.modulation_width);
        let masses = (0..=dec.j_max)
            .map(|j| {
                xi_part * self.mu_integral(|m| dec.layer(j, m) * mu_density(m)) / (4.0 * PI * PI)
            })
            .collect();
        LayerMasses {
            masses,
            decomposition: dec,
        }
    }

    /// `‖u‖_{X^b_s}`, separable in `(ξ, μ)`.
    pub fn x_norm(&self, s: f64, b: f64) -> f64 {
        let xi = self.xi_integral(|x| {
            let a = self.amplitude(x);
            a * a * powf(1.0 + x.abs(), 2.0 * s)
        });
        self.layers(xi, |m| {
            let g = self.profile(m);
            g * g
        })
        .l1(b)
    }

    /// `‖xu‖_{X^b_{s0}} + ‖tu‖_{X^b_{s1}}`.
    ///
    /// `∂ξ[A g(λ−ω)] = A′g − Aω′g′`; the cross term integrates to zero
    /// against the even layers because `g g′` is odd.
    pub fn y_norm(&self, params: &DispersionParams, s0: f64, s1: f64, b: f64) -> f64 {
        let w0 = |x: f64| powf(1.0 + x.abs(), 2.0 * s0);
        let ramp = self.xi_integral(|x| {
            let d = self.amplitude_deriv(x);
            d * d * w0(x)
        });
        let transport = self.xi_integral(|x| {
            let a = self.amplitude(x) * omega_prime(params, x);
            a * a * w0(x)
        });
        let dec = DyadicDecomposition::covering(self.modulation_width);
        let masses = (0..=dec.j_max)
            .map(|j| {
                let g2 = self.mu_integral(|m| {
                    let g = self.profile(m);
                    dec.layer(j, m) * g * g
                });
                let dg2 = self.mu_integral(|m| {
                    let g = self.profile_deriv(m);
                    dec.layer(j, m) * g * g
                });
                (ramp * g2 + transport * dg2) / (4.0 * PI * PI)
            })
            .collect();
        let x_weight = LayerMasses {
            masses,
            decomposition: dec,
        }
        .l1(b);
        let amp = self.xi_integral(|x| {
            let a = self.amplitude(x);
            a * a * powf(1.0 + x.abs(), 2.0 * s1)
        });
        let t_weight = self
            .layers(amp, |m| {
                let g = self.profile_deriv(m);
                g * g
            })
            .l1(b);
        x_weight + t_weight
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Recipe {
    /// Low packet on `[α/2, α]`, high packet on `[N, N+α]`, `α = N^{−1−a}`.
    Basic,
    /// Low packet on `[−β, β]`, high packet on `[N, N+β]`, `β = N^{−a/2}`.
    Refined,
}

/// Sampling policy for the adapted-coordinate quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridPolicy {
    /// Output `ξ` nodes across the product support.
    pub xi_samples: usize,
    /// Nodes in `ξ₁` used to invert `w = Ω(ξ₁)`.
    pub inversion_samples: usize,
    /// `μ` spacing; capped at 1/32 of the `Ω` range on each row.
    pub dmu: f64,
    /// Minimum nodes across the thinnest packet on a uniform grid.
    pub samples_per_width: usize,
}

impl GridPolicy {
    pub fn for_recipe(recipe: Recipe) -> Self {
        match recipe {
            Recipe::Basic => Self {
                xi_samples: 64,
                inversion_samples: 1025,
                dmu: 1.0 / 64.0,
                samples_per_width: 8,
            },
            Recipe::Refined => Self {
                xi_samples: 32,
                inversion_samples: 4097,
                dmu: 1.0 / 8.0,
                samples_per_width: 8,
            },
        }
    }

    fn validate(&self) -> Result<()> {
        if self.xi_samples < self.samples_per_width || self.samples_per_width < 8 {
            return Err(Error::Resolution {
                what: "output xi nodes".into(),
                required: self.samples_per_width.max(8),
                actual: self.xi_samples,
            });
        }
        if self.inversion_samples < 16 || !(self.dmu > 0.0 && self.dmu.is_finite()) {
            bail!(
                Config,
                "grid policy needs >= 16 inversion nodes and a positive dmu"
            );
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InteractionExperiment {
    pub a: f64,
    pub recipe: Recipe,
    pub b: f64,
    /// Dyadic exponents `k` with `N = 2^k`.
    pub n_exponents: Vec<u32>,
    pub taper: f64,
    pub modulation_width: f64,
    pub policy: GridPolicy,
}

impl InteractionExperiment {
    pub fn new(a: f64, recipe: Recipe, b: f64) -> Self {
        Self {
            a,
            recipe,
            b,
            n_exponents: (6..=12).collect(),
            taper: 0.1,
            modulation_width: 1.0,
            policy: GridPolicy::for_recipe(recipe),
        }
    }

    pub fn params(&self) -> Result<DispersionParams> {
        DispersionParams::new(self.a)
    }

    /// Thin-packet width: `α = N^{−1−a}` or `β = N^{−a/2}`.
    pub fn packet_width(&self, n: f64) -> f64 {
        match self.recipe {
            Recipe::Basic => powf(n, -1.0 - self.a),
            Recipe::Refined => powf(n, -self.a / 2.0),
        }
    }
}

/// Fewest double-precision steps of `N` the thin packet must span.
pub const MIN_ULPS: usize = 4096;

/// The two packets of a recipe at frequency `n`.
pub fn build_packets(exp: &InteractionExperiment, n: f64) -> Result<(WavePacket, WavePacket)> {
    exp.policy.validate()?;
    if !(n >= 1.0 && n.is_finite()) {
        bail!(Config, "packet frequency N = {n} must be >= 1");
    }
    if !(0.0..0.5).contains(&exp.taper) || exp.modulation_width <= 0.0 {
        bail!(
            Config,
            "taper must lie in [0, 1/2) and the modulation width be positive"
        );
    }
    let w = exp.packet_width(n);
    // Ω on the thin packet cancels down from ~N^{2+a} to ~wN^{1+a}; keep the
    // relative rounding error of that cancellation below 1/MIN_ULPS.
    let ulps = w / (n * f64::EPSILON);
    if ulps < MIN_ULPS as f64 {
        return Err(Error::Resolution {
            what: alloc::format!("double-precision steps across the packet at N = {n}"),
            required: MIN_ULPS,
            actual: ulps as usize,
        });
    }
    let (lo1, hi1) = match exp.recipe {
        Recipe::Basic => (w / 2.0, w),
        Recipe::Refined => (-w, w),
    };
    let mk = |lo, hi| WavePacket {
        xi_lo: lo,
        xi_hi: hi,
        modulation_width: exp.modulation_width,
        taper: exp.taper,
    };
    Ok((mk(lo1, hi1), mk(n, n + w)))
}

/// Layer masses of `∂x(u₁u₂)` with weight `(1+|ξ|)^{2s}`, plus the share of
/// the `L²` mass inside a box.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductLayers {
    pub layers: LayerMasses,
    pub max_modulation: f64,
    /// Fraction of `‖u₁u₂‖²` with `ξ ∈ box_xi` and `|μ| ≤ box_mu`.
    pub box_fraction: f64,
}

/// Box used by [`product_layers`] for its concentration diagnostic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MassBox {
    pub xi_lo: f64,
    pub xi_hi: f64,
    pub mu: f64,
}

fn correlation_kernel(p1: &WavePacket, p2: &WavePacket, dmu: f64) -> (Vec<f64>, i64) {
    let reach = p1.modulation_width + p2.modulation_width;
    let half = crate::math::ceil(reach / dmu) as i64;
    let w1 = p1.modulation_width;
    let kernel = (-half..=half)
        .map(|k| {
            let y = k as f64 * dmu;
            integrate(|s| p1.profile(s) * p2.profile(y - s), -w1, w1, 2000)
        })
        .collect();
    (kernel, half)
}

/// `∂x(u₁u₂)` in adapted coordinates, reduced to layer masses.
pub fn product_layers(
    params: &DispersionParams,
    p1: &WavePacket,
    p2: &WavePacket,
    s: f64,
    policy: &GridPolicy,
    mass_box: MassBox,
) -> Result<ProductLayers> {
    policy.validate()?;
    let (out_lo, out_hi) = (p1.xi_lo + p2.xi_lo, p1.xi_hi + p2.xi_hi);
    let nxi = policy.xi_samples;
    let dxi = (out_hi - out_lo) / nxi as f64;
    let k = policy.inversion_samples;
    let reach = p1.modulation_width + p2.modulation_width;

    // First pass: Ω range per row, for the layer count and the μ spacing.
    struct Row {
        xi: f64,
        w: Vec<f64>,
        q: Vec<f64>,
    }
    let mut rows = Vec::with_capacity(nxi);
    let mut max_mod: f64 = 0.0;
    for r in 0..nxi {
        let xi = out_lo + (r as f64 + 0.5) * dxi;
        let l = p1.xi_lo.max(xi - p2.xi_hi);
        let h = p1.xi_hi.min(xi - p2.xi_lo);
        if h <= l {
            continue;
        }
        let wxi = omega(params, xi);
        let mut ws = Vec::with_capacity(k);
        let mut qs = Vec::with_capacity(k);
        let mut sign = 0.0;
        for i in 0..k {
            let x1 = l + (h - l) * i as f64 / (k - 1) as f64;
            let x2 = xi - x1;
            let d = omega_prime(params, x2) - omega_prime(params, x1);
            let sd = if d > 0.0 {
                1.0
            } else if d < 0.0 {
                -1.0
            } else {
                0.0
            };
            if sd == 0.0 || (sign != 0.0 && sd != sign) {
                bail!(
                    Degenerate,
                    "resonance is not monotone in xi1 on the product support at xi = {xi}"
                );
            }
            sign = sd;
            ws.push(wxi - (omega(params, x1) + omega(params, x2)));
            qs.push(p1.amplitude(x1) * p2.amplitude(x2) / d.abs());
        }
        if sign < 0.0 {
            ws.reverse();
            qs.reverse();
        }
        max_mod = max_mod.max(ws[0].abs()).max(ws[k - 1].abs());
        rows.push(Row { xi, w: ws, q: qs });
    }
    if rows.is_empty() {
        bail!(Degenerate, "packets have empty product support");
    }
    max_mod += reach;
    let dec = DyadicDecomposition::covering(max_mod);
    let mut masses = alloc::vec![0.0; dec.j_max + 1];
    let mut total = 0.0;
    let mut boxed = 0.0;
    let norm = 1.0 / (4.0 * PI * PI);

    for row in &rows {
        let span = row.w[k - 1] - row.w[0];
        let dmu = if span > 0.0 {
            policy.dmu.min(span / 32.0)
        } else {
            policy.dmu
        };
        let (kernel, half) = correlation_kernel(p1, p2, dmu);
        // H on the uniform w grid by monotone linear interpolation in ξ₁.
        let k0 = crate::math::ceil(row.w[0] / dmu) as i64;
        let k1 = crate::math::floor(row.w[k - 1] / dmu) as i64;
        let mut hs = Vec::with_capacity((k1 - k0 + 1).max(0) as usize);
        let mut seg = 0;
        for kk in k0..=k1 {
            let w = kk as f64 * dmu;
            while seg + 2 < k && row.w[seg + 1] < w {
                seg += 1;
            }
            let (wa, wb) = (row.w[seg], row.w[seg + 1]);
            let t = if wb > wa {
                ((w - wa) / (wb - wa)).clamp(0.0, 1.0)
            } else {
                0.0
            };
            hs.push(row.q[seg] + t * (row.q[seg + 1] - row.q[seg]));
        }
        // F(μ_m) = dμ Σ_k H_k G(μ_m + w_k) with μ_m = m·dμ.
        let weight = powf(1.0 + row.xi.abs(), 2.0 * s) * row.xi * row.xi * dxi * dmu * norm;
        let in_box_xi = row.xi >= mass_box.xi_lo && row.xi <= mass_box.xi_hi;
        let m_lo = -k1 - half;
        let m_hi = -k0 + half;
        for m in m_lo..=m_hi {
            let mut acc = 0.0;
            // Kernel index n = m + kk must satisfy |n| ≤ half.
            let kk_lo = (-half - m).max(k0);
            let kk_hi = (half - m).min(k1);
            for kk in kk_lo..=kk_hi {
                acc += hs[(kk - k0) as usize] * kernel[(m + kk + half) as usize];
            }
            let f = acc * dmu * norm;
            let f2 = f * f;
            if f2 == 0.0 {
                continue;
            }
            let mu = m as f64 * dmu;
            let plain = f2 * dxi * dmu * norm;
            total += plain;
            if in_box_xi && mu.abs() <= mass_box.mu {
                boxed += plain;
            }
            for (j, chi) in dec.active(mu) {
                masses[j] += chi * f2 * weight;
            }
        }
    }
    Ok(ProductLayers {
        layers: LayerMasses {
            masses,
            decomposition: dec,
        },
        max_modulation: max_mod,
        box_fraction: if total > 0.0 { boxed / total } else { 0.0 },
    })
}

/// Both sides of the bilinear estimate at one frequency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BilinearSides {
    pub a: f64,
    pub n: f64,
    pub recipe: Recipe,
    pub b: f64,
    /// `‖∂x(u₁u₂)‖_{X^{−b}_{s*}}`.
    pub lhs: f64,
    /// `‖u₁‖_{X^b_{s*}} ‖u₂‖_{X^b_{s*}}`.
    pub rhs1: f64,
    /// `‖u₁‖_X ‖u₂‖_X^{1/2} ‖u₂‖_Y^{1/2}` at `b = 1/2`.
    pub rhs2: f64,
    /// `‖u₂‖_X ‖u₁‖_X^{1/2} ‖u₁‖_Y^{1/2}` at `b = 1/2`.
    pub rhs3: f64,
    /// Basic recipe: `lhs/rhs1`. Refined recipe: `lhs/max(rhs1, rhs2, rhs3)`.
    pub ratio: f64,
    /// `Σ_j 2^{j(1/2−b)}` over the layers the product occupies.
    pub dyadic_sum: f64,
    /// Highest occupied layer.
    pub top_layer: usize,
    pub box_fraction: f64,
}

/// Evaluate both sides for the experiment's recipe at frequency `n`.
pub fn bilinear_sides(exp: &InteractionExperiment, n: f64) -> Result<BilinearSides> {
    let params = exp.params()?;
    let s = params.s_star;
    let (p1, p2) = build_packets(exp, n)?;
    let width = exp.packet_width(n);
    let mass_box = MassBox {
        xi_lo: n,
        xi_hi: n + 2.0 * width,
        mu: 4.0,
    };
    let prod = product_layers(&params, &p1, &p2, s, &exp.policy, mass_box)?;
    let lhs = prod.layers.l1(-exp.b);
    let top_layer = prod
        .layers
        .masses
        .iter()
        .rposition(|&m| m > 0.0)
        .unwrap_or(0);
    let dyadic_sum = (0..=top_layer)
        .map(|j| powf(2.0, j as f64 * (0.5 - exp.b)))
        .sum();

    let x1b = p1.x_norm(s, exp.b);
    let x2b = p2.x_norm(s, exp.b);
    let rhs1 = x1b * x2b;
    let x1 = p1.x_norm(s, 0.5);
    let x2 = p2.x_norm(s, 0.5);
    let y1 = p1.y_norm(&params, -s, s, 0.5);
    let y2 = p2.y_norm(&params, -s, s, 0.5);
    let rhs2 = x1 * sqrt(x2 * y2);
    let rhs3 = x2 * sqrt(x1 * y1);
    let ratio = match exp.recipe {
        Recipe::Basic => lhs / rhs1,
        Recipe::Refined => lhs / rhs1.max(rhs2).max(rhs3),
    };
    Ok(BilinearSides {
        a: exp.a,
        n,
        recipe: exp.recipe,
        b: exp.b,
        lhs,
        rhs1,
        rhs2,
        rhs3,
        ratio,
        dyadic_sum,
        top_layer,
        box_fraction: prod.box_fraction,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefinedResult {
    pub ratio: f64,
    pub dyadic_sum: f64,
    /// `ratio / dyadic_sum`, the part that carries the power of `N`.
    pub normalized: f64,
}

/// Refined low/high interaction at modulation exponent `b`.
pub fn refined_interaction(exp: &InteractionExperiment, n: f64, b: f64) -> Result<RefinedResult> {
    let mut e = exp.clone();
    e.recipe = Recipe::Refined;
    e.b = b;
    let sides = bilinear_sides(&e, n)?;
    Ok(RefinedResult {
        ratio: sides.ratio,
        dyadic_sum: sides.dyadic_sum,
        normalized: sides.ratio / sides.dyadic_sum,
    })
}

/// Least-squares line with its coefficient of determination.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

fn line_fit(xs: &[f64], ys: &[f64]) -> Fit {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let r = y - intercept - slope * x;
            r * r
        })
        .sum();
    let r2 = if syy == 0.0 { 1.0 } else { 1.0 - sse / syy };
    Fit {
        slope,
        intercept,
        r2,
    }
}

fn check_series(series: &[(f64, f64)]) -> Result<()> {
    if series.len() < 4 {
        bail!(FitDomain, "need at least 4 points, got {}", series.len());
    }
    for &(n, v) in series {
        if !(n > 0.0 && v > 0.0 && n.is_finite() && v.is_finite()) {
            bail!(FitDomain, "nonpositive or non-finite point ({n}, {v})");
        }
    }
    Ok(())
}

/// Fit `log₂ value = slope·log₂ N + intercept`.
pub fn fit_exponent(series: &[(f64, f64)]) -> Result<Fit> {
    check_series(series)?;
    let xs: Vec<f64> = series.iter().map(|p| log2(p.0)).collect();
    let ys: Vec<f64> = series.iter().map(|p| log2(p.1)).collect();
    Ok(line_fit(&xs, &ys))
}

/// Fit `value = slope·log₂ N + intercept`.
pub fn fit_log_affine(series: &[(f64, f64)]) -> Result<Fit> {
    check_series(series)?;
    let xs: Vec<f64> = series.iter().map(|p| log2(p.0)).collect();
    let ys: Vec<f64> = series.iter().map(|p| p.1).collect();
    Ok(line_fit(&xs, &ys))
}

/// Sample both packets on uniform grids, checking that each is resolved.
pub fn packets_on_grid(
    params: &DispersionParams,
    p1: &WavePacket,
    p2: &WavePacket,
    xi_grid: SpatialGrid,
    t_grid: SpatialGrid,
    samples_per_width: usize,
) -> Result<(SpacetimeField, SpacetimeField)> {
    for (p, what) in [(p1, "low packet"), (p2, "high packet")] {
        let have = (p.support_width() / xi_grid.dxi() + 1e-9) as usize;
        if have < samples_per_width {
            return Err(Error::Resolution {
                what: alloc::format!("{what} xi support"),
                required: samples_per_width,
                actual: have,
            });
        }
        let have = (2.0 * p.modulation_width / t_grid.dxi() + 1e-9) as usize;
        if have < samples_per_width {
            return Err(Error::Resolution {
                what: alloc::format!("{what} modulation band"),
                required: samples_per_width,
                actual: have,
            });
        }
    }
    let top = p1.xi_hi.abs().max(p2.xi_hi.abs()) + p1.xi_hi.abs();
    let need = omega(params, top).abs() + 2.0 * (p1.modulation_width + p2.modulation_width);
    if need > t_grid.xi_max() || top > xi_grid.xi_max() {
        bail!(
            Coverage,
            "grid window (xi {:.3}, lambda {:.3}) does not hold the product support (xi {top:.3}, lambda {need:.3})",
            xi_grid.xi_max(),
            t_grid.xi_max()
        );
    }
    let f = |p: &WavePacket| {
        SpacetimeField::from_spectral_fn(xi_grid, t_grid, |xi, lam| {
            crate::Complex64::new(p.spectral(params, xi, lam), 0.0)
        })
    };
    Ok((f(p1), f(p2)))
}

/// `‖∂x(u₁u₂)‖_{X^{−b}_s}` with the literal discrete convolution.
pub fn lhs_on_grid(
    fft: &dyn FftProvider,
    params: &DispersionParams,
    u1: &SpacetimeField,
    u2: &SpacetimeField,
    s: f64,
    b: f64,
) -> Result<f64> {
    let prod = convolve(fft, u1, u2, 1e-6)?;
    let mut d = prod.clone();
    let nt = d.nt();
    for i in 0..d.nx() {
        let xi = d.xi_grid.xi(i);
        for c in &mut d.coeffs[i * nt..(i + 1) * nt] {
            *c *= crate::Complex64::new(0.0, -xi);
        }
    }
    norm_x(params, &d, s, -b)
}

#[cfg(all(test, feature = "std"))]
mod tests {
    use super::*;
    use crate::fft::RustFft;
    use crate::rng::seeded;
    use rand::Rng;

    #[test]
    fn fit_examples() {
        let sq: Vec<(f64, f64)> = (3..9)
            .map(|k| (powf(2.0, k as f64), powf(2.0, 2.0 * k as f64)))
            .collect();
        let f = fit_exponent(&sq).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-12 && (f.r2 - 1.0).abs() < 1e-12);
        let c: Vec<(f64, f64)> = (3..9).map(|k| (powf(2.0, k as f64), 3.0)).collect();
        assert!(fit_exponent(&c).unwrap().slope.abs() < 1e-12);
        let mut rng = seeded(4);
        let noisy: Vec<(f64, f64)> = (4..14)
            .map(|k| {
                let n = powf(2.0, k as f64);
                (n, sqrt(n) * (1.0 + 0.01 * rng.random_range(-1.0..1.0)))
            })
            .collect();
        assert!((fit_exponent(&noisy).unwrap().slope - 0.5).abs() < 0.02);
        assert!(matches!(fit_exponent(&sq[..3]), Err(Error::FitDomain(_))));
        let mut bad = sq.clone();
        bad[1].1 = 0.0;
        assert!(matches!(fit_exponent(&bad), Err(Error::FitDomain(_))));
    }

    #[test]
    fn packet_construction() {
        let e = InteractionExperiment::new(1.0, Recipe::Basic, 0.5);
        let (p1, p2) = build_packets(&e, 64.0).unwrap();
        assert_eq!(p1.xi_hi, powf(2.0, -12.0));
        assert_eq!(p1.xi_lo, powf(2.0, -13.0));
        assert_eq!((p2.xi_lo, p2.xi_hi), (64.0, 64.0 + powf(2.0, -12.0)));
        let e = InteractionExperiment::new(0.0, Recipe::Refined, 0.5);
        let (p1, _) = build_packets(&e, 256.0).unwrap();
        assert_eq!((p1.xi_lo, p1.xi_hi), (-1.0, 1.0));
        let x = p1.x_norm(0.0, 0.0);
        let layers_l2 = sqrt(p1.l2_norm_sq());
        assert!(x >= layers_l2 * (1.0 - 1e-6));
    }

    #[test]
    fn plateau_derivative_matches_difference_quotient() {
        let p = WavePacket {
            xi_lo: 1.0,
            xi_hi: 3.0,
            modulation_width: 1.0,
            taper: 0.2,
        };
        for x in [1.05, 1.2, 1.39, 2.0, 2.7, 2.95] {
            let h = 1e-6;
            let fd = (p.amplitude(x + h) - p.amplitude(x - h)) / (2.0 * h);
            assert!((fd - p.amplitude_deriv(x)).abs() < 1e-6);
        }
    }

    fn small_grid_case(a: f64, recipe: Recipe, n: f64) -> (f64, f64, f64, f64) {
        let fft = RustFft::new();
        let e = InteractionExperiment::new(a, recipe, 0.5);
        let params = e.params().unwrap();
        let (p1, p2) = build_packets(&e, n).unwrap();
        let w = p1.support_width().min(p2.support_width());
        // Twelve nodes across the thin packet and across the unit band.
        let lx = 2.0 * PI * 12.0 / w;
        let top = p2.xi_hi + p1.xi_hi.abs();
        let gx = SpatialGrid::new(
            ((2.0 * top * lx / (2.0 * PI)) as usize + 1).next_power_of_two(),
            lx,
        )
        .unwrap();
        let lam = omega(&params, top) + 6.0;
        let lt = 2.0 * PI * 12.0;
        let gt = SpatialGrid::new(
            ((2.0 * lam * lt / (2.0 * PI)) as usize + 1).next_power_of_two(),
            lt,
        )
        .unwrap();
        let (u1, u2) = packets_on_grid(&params, &p1, &p2, gx, gt, 8).unwrap();
        let grid_lhs = lhs_on_grid(&fft, &params, &u1, &u2, params.s_star, 0.5).unwrap();
        let sides = bilinear_sides(&e, n).unwrap();
        let grid_x = norm_x(&params, &u2, params.s_star, 0.5).unwrap();
        (grid_lhs, sides.lhs, grid_x, p2.x_norm(params.s_star, 0.5))
    }

    #[test]
    fn adapted_quadrature_matches_discrete_convolution() {
        for (a, recipe, n) in [
            (0.5, Recipe::Basic, 2.0),
            (0.0, Recipe::Refined, 4.0),
            (1.0, Recipe::Basic, 2.0),
        ] {
            let (grid_lhs, lhs, grid_x, x) = small_grid_case(a, recipe, n);
            assert!(
                (grid_x - x).abs() < 0.02 * x,
                "{a} {recipe:?}: X {grid_x} vs {x}"
            );
            assert!(
                (grid_lhs - lhs).abs() < 0.03 * lhs,
                "{a} {recipe:?}: lhs {grid_lhs} vs {lhs}"
            );
        }
    }

    #[test]
    fn basic_output_concentrates_in_the_predicted_box() {
        for a in [0.0, 0.5, 1.0] {
            let e = InteractionExperiment::new(a, Recipe::Basic, 0.5);
            let s = bilinear_sides(&e, 256.0).unwrap();
            assert!(s.box_fraction >= 0.9, "a = {a}: {}", s.box_fraction);
        }
    }

    #[test]
    fn under_resolved_grid_is_rejected() {
        let e = InteractionExperiment::new(0.5, Recipe::Basic, 0.5);
        let params = e.params().unwrap();
        let (p1, p2) = build_packets(&e, 16.0).unwrap();
        let gx = SpatialGrid::new(64, 2.0 * PI).unwrap();
        let gt = SpatialGrid::new(64, 2.0 * PI).unwrap();
        assert!(matches!(
            packets_on_grid(&params, &p1, &p2, gx, gt, 8),
            Err(Error::Resolution { .. })
        ));
    }

    #[test]
    fn packets_thinner_than_rounding_are_rejected() {
        let e = InteractionExperiment::new(1.0, Recipe::Basic, 0.5);
        assert!(build_packets(&e, 2f64.powi(13)).is_ok());
        assert!(matches!(
            build_packets(&e, 2f64.powi(14)),
            Err(Error::Resolution { .. })
        ));
    }
}
