//! Strichartz-ratio family across grid refinements, plus requested norms.

use std::f64::consts::PI;

use anyhow::{Context, Result};
use gbo_core::bourgain::{bump, evaluate, norm_f, strichartz_ratio, NormKind};
use gbo_core::rng::stream;
use gbo_core::{
    omega, Complex64, DispersionParams, RustFft, SpacetimeField, SpatialGrid, SpectralField,
};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::config::{FamilyConfig, NormGrid, NormsConfig};
use crate::output::{csv_bytes, Check, Outcome};

/// One random family member, described analytically so that every grid
/// samples the same function.
#[derive(Debug, Clone)]
struct Member {
    width: f64,
    shift: f64,
    /// `(wavenumber index, cos amplitude, sin amplitude)`.
    terms: Vec<(u32, f64, f64)>,
}

impl Member {
    fn draw(family: &FamilyConfig, seed: u64, index: usize) -> Self {
        let mut rng = stream(seed, index as u64);
        let [lo, hi] = family.window;
        let width = if hi > lo {
            rng.random_range(lo..=hi)
        } else {
            lo
        };
        let shift = if family.max_shift > 0.0 {
            rng.random_range(-family.max_shift..=family.max_shift)
        } else {
            0.0
        };
        let terms = (1..=family.max_mode)
            .map(|m| {
                (
                    m,
                    rng.random_range(-1.0..=1.0),
                    rng.random_range(-1.0..=1.0),
                )
            })
            .collect();
        Self {
            width,
            shift,
            terms,
        }
    }

    /// `ψ((t−t₀)/T) W(t)f` sampled `[x][t]`; each mode travels exactly.
    fn field(
        &self,
        fft: &RustFft,
        params: &DispersionParams,
        g: &NormGrid,
    ) -> Result<SpacetimeField> {
        let xg = SpatialGrid::new(g.nx, g.length_x)?;
        let tg = SpatialGrid::new(g.nt, g.length_t)?;
        let waves: Vec<(f64, f64, f64, f64)> = self
            .terms
            .iter()
            .map(|&(m, c, s)| {
                let k = 2.0 * PI * m as f64 / g.length_x;
                (k, omega(params, k), c, s)
            })
            .collect();
        let mut samples = Vec::with_capacity(g.nx * g.nt);
        for i in 0..g.nx {
            let x = xg.x(i);
            for n in 0..g.nt {
                let t = tg.x(n);
                let w = bump((t - self.shift) / self.width);
                let v: f64 = waves
                    .iter()
                    .map(|&(k, om, c, s)| {
                        let ph = k * x - om * t;
                        c * ph.cos() + s * ph.sin()
                    })
                    .sum();
                samples.push(Complex64::new(w * v, 0.0));
            }
        }
        Ok(SpacetimeField::from_samples(fft, xg, tg, &samples)?)
    }

    fn data(&self, fft: &RustFft, g: &NormGrid) -> Result<SpectralField> {
        let xg = SpatialGrid::new(g.nx, g.length_x)?;
        Ok(SpectralField::from_fn(fft, xg, |x| {
            self.terms
                .iter()
                .map(|&(m, c, s)| {
                    let k = 2.0 * PI * m as f64 / g.length_x;
                    c * (k * x).cos() + s * (k * x).sin()
                })
                .sum()
        }))
    }
}

#[derive(Serialize)]
struct Row {
    member: usize,
    grid: usize,
    width: f64,
    shift: f64,
    ratio: f64,
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

pub fn run(cfg: &NormsConfig, seed: u64) -> Result<Outcome> {
    let params = DispersionParams::new(cfg.a)?;
    let members: Vec<Member> = (0..cfg.family.count)
        .map(|i| Member::draw(&cfg.family, seed, i))
        .collect();
    let mut rows = Vec::new();
    let mut checks = Vec::new();
    let mut per_grid = Vec::new();
    let mut maxima = Vec::new();
    for (gi, g) in cfg.grids.iter().enumerate() {
        let ratios: Vec<f64> = members
            .par_iter()
            .enumerate()
            .map(|(mi, m)| {
                let fft = RustFft::new();
                let u = m.field(&fft, &params, g)?;
                strichartz_ratio(&fft, &params, &u)
                    .with_context(|| format!("member {mi} on grid {gi}"))
            })
            .collect::<Result<_>>()?;
        for (mi, (m, &r)) in members.iter().zip(&ratios).enumerate() {
            rows.push(Row {
                member: mi,
                grid: gi,
                width: m.width,
                shift: m.shift,
                ratio: r,
            });
        }
        let max = ratios.iter().copied().fold(0.0, f64::max);
        let med = median(&ratios);
        checks.push(Check::lt(
            format!("grid {gi} max/median"),
            max / med,
            cfg.stability_factor,
        ));
        per_grid.push(json!({
            "nx": g.nx,
            "nt": g.nt,
            "max": max,
            "median": med,
            "min": ratios.iter().copied().fold(f64::INFINITY, f64::min),
        }));
        maxima.push(max);
    }
    for (gi, w) in maxima.windows(2).enumerate() {
        let q = w[1] / w[0];
        let name = format!("grids {gi}->{} max ratio change", gi + 1);
        checks.push(Check::lt(
            format!("{name} (upper)"),
            q,
            cfg.stability_factor,
        ));
        checks.push(Check::gt(
            format!("{name} (lower)"),
            q,
            1.0 / cfg.stability_factor,
        ));
    }

    let mut reports = Vec::new();
    if !cfg.requests.is_empty() {
        let fft = RustFft::new();
        let g = &cfg.grids[0];
        let u = members[0].field(&fft, &params, g)?;
        for req in &cfg.requests {
            let value = if req.kind == NormKind::F {
                json!({ "kind": "F", "s": req.s, "value": norm_f(&fft, &params, &members[0].data(&fft, g)?, req.s)? })
            } else {
                serde_json::to_value(evaluate(&fft, &params, &u, req)?)?
            };
            reports.push(value);
        }
    }

    Ok(Outcome {
        files: vec![("strichartz.csv".into(), csv_bytes(&rows)?)],
        summary: json!({
            "a": cfg.a,
            "b0": params.b0,
            "members": cfg.family.count,
            "grids": per_grid,
            "requests": reports,
        }),
        checks,
    })
}
