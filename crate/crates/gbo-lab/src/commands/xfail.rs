//! Bilinear counterexample sweeps over `N = 2^k` and their slope fits.

use anyhow::{Context, Result};
use gbo_core::xlab::{
    bilinear_sides, fit_exponent, fit_log_affine, Fit, GridPolicy, InteractionExperiment, Recipe,
};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::config::{Quantity, XfailConfig, XfailExpectation, XfailRun};
use crate::output::{csv_bytes, Check, Outcome};

#[derive(Serialize)]
struct Row {
    a: f64,
    #[serde(rename = "N")]
    n: f64,
    recipe: Recipe,
    b: f64,
    lhs: f64,
    rhs1: f64,
    rhs2: f64,
    rhs3: f64,
    ratio: f64,
    dyadic_sum: f64,
    normalized: f64,
    top_layer: usize,
    box_fraction: f64,
}

fn experiment(r: &XfailRun) -> InteractionExperiment {
    InteractionExperiment {
        n_exponents: r.n_exponents.clone(),
        policy: r.policy.unwrap_or_else(|| GridPolicy::for_recipe(r.recipe)),
        ..InteractionExperiment::new(r.a, r.recipe, r.b)
    }
}

fn label(i: usize, r: &XfailRun) -> String {
    let recipe = match r.recipe {
        Recipe::Basic => "basic",
        Recipe::Refined => "refined",
    };
    format!("run {i} (a={}, {recipe}, b={})", r.a, r.b)
}

pub fn run(cfg: &XfailConfig) -> Result<Outcome> {
    let jobs: Vec<(usize, u32)> = cfg
        .runs
        .iter()
        .enumerate()
        .flat_map(|(i, r)| r.n_exponents.iter().map(move |&k| (i, k)))
        .collect();
    let rows: Vec<Row> = jobs
        .par_iter()
        .map(|&(i, k)| {
            let r = &cfg.runs[i];
            let n = 2f64.powi(k as i32);
            let s = bilinear_sides(&experiment(r), n)
                .with_context(|| format!("{} at N = 2^{k}", label(i, r)))?;
            Ok(Row {
                a: s.a,
                n: s.n,
                recipe: s.recipe,
                b: s.b,
                lhs: s.lhs,
                rhs1: s.rhs1,
                rhs2: s.rhs2,
                rhs3: s.rhs3,
                ratio: s.ratio,
                dyadic_sum: s.dyadic_sum,
                normalized: s.ratio / s.dyadic_sum,
                top_layer: s.top_layer,
                box_fraction: s.box_fraction,
            })
        })
        .collect::<Result<_>>()?;

    let mut checks = Vec::new();
    let mut runs = Vec::new();
    let mut offset = 0;
    for (i, r) in cfg.runs.iter().enumerate() {
        let mine = &rows[offset..offset + r.n_exponents.len()];
        offset += r.n_exponents.len();
        let series = |q: Quantity| -> Vec<(f64, f64)> {
            mine.iter()
                .map(|row| {
                    (
                        row.n,
                        if q == Quantity::Ratio {
                            row.ratio
                        } else {
                            row.normalized
                        },
                    )
                })
                .collect()
        };
        let power = |q| fit_exponent(&series(q)).with_context(|| label(i, r));
        let affine = |q| fit_log_affine(&series(q)).with_context(|| label(i, r));
        let fits: [(Quantity, Fit, Fit); 2] = [
            (
                Quantity::Ratio,
                power(Quantity::Ratio)?,
                affine(Quantity::Ratio)?,
            ),
            (
                Quantity::Normalized,
                power(Quantity::Normalized)?,
                affine(Quantity::Normalized)?,
            ),
        ];
        let pick = |q: Quantity| fits.iter().find(|f| f.0 == q).map(|f| (f.1, f.2)).unwrap();
        let name = label(i, r);
        for e in &r.expect {
            match *e {
                XfailExpectation::Exponent {
                    quantity,
                    target,
                    tolerance,
                } => checks.push(Check::le(
                    format!(
                        "{name} {} exponent |{:.4} - {target}|",
                        qname(quantity),
                        pick(quantity).0.slope
                    ),
                    (pick(quantity).0.slope - target).abs(),
                    tolerance,
                )),
                XfailExpectation::MaxExponent { quantity, limit } => checks.push(Check::le(
                    format!("{name} {} exponent", qname(quantity)),
                    pick(quantity).0.slope,
                    limit,
                )),
                XfailExpectation::LogAffine { quantity, min_r2 } => {
                    let f = pick(quantity).1;
                    checks.push(Check::gt(
                        format!("{name} {} log-affine R^2", qname(quantity)),
                        f.r2,
                        min_r2,
                    ));
                    checks.push(Check::gt(
                        format!("{name} {} log-affine slope", qname(quantity)),
                        f.slope,
                        0.0,
                    ));
                }
            }
        }
        runs.push(json!({
            "a": r.a,
            "recipe": r.recipe,
            "b": r.b,
            "ratio_exponent": fits[0].1,
            "ratio_log_affine": fits[0].2,
            "normalized_exponent": fits[1].1,
            "normalized_log_affine": fits[1].2,
        }));
    }
    Ok(Outcome {
        files: vec![("xfail.csv".into(), csv_bytes(&rows)?)],
        summary: json!({ "runs": runs }),
        checks,
    })
}

fn qname(q: Quantity) -> &'static str {
    match q {
        Quantity::Ratio => "ratio",
        Quantity::Normalized => "normalized ratio",
    }
}
