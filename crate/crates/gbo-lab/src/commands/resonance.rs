//! Resonance lower bounds on random samples and the admissible-b windows.

use anyhow::Result;
use gbo_core::resonance::{
    admissible_b, brute_force_constants, cubic_closed_form_error, lower_bound_check,
    sample_comparable,
};
use gbo_core::rng::stream;
use gbo_core::DispersionParams;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use super::tag;
use crate::config::ResonanceConfig;
use crate::output::{csv_bytes, Check, Outcome};

#[derive(Serialize)]
struct Row {
    a: f64,
    branch: &'static str,
    c_bound: f64,
    c_empirical: f64,
    samples: usize,
    degenerate: usize,
    violations: usize,
}

pub fn run(cfg: &ResonanceConfig, seed: u64) -> Result<Outcome> {
    let [lo, hi] = cfg.log2_range;
    let reports = cfg
        .a_values
        .par_iter()
        .enumerate()
        .map(|(i, &a)| {
            let params = DispersionParams::new(a)?;
            let constants = brute_force_constants(&params, cfg.constant_points, cfg.safety);
            let samples = sample_comparable(&mut stream(seed, i as u64), cfg.samples, lo, hi);
            Ok(lower_bound_check(&params, &samples, &constants)?)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::new();
    let mut checks = Vec::new();
    for (a, r) in cfg.a_values.iter().zip(&reports) {
        for (name, b) in [
            ("same_sign", &r.same_sign),
            ("opposite_sign", &r.opposite_sign),
        ] {
            rows.push(Row {
                a: *a,
                branch: name,
                c_bound: b.c_bound,
                c_empirical: b.c_empirical,
                samples: b.n_samples,
                degenerate: b.degenerate,
                violations: b.violations.len(),
            });
        }
        checks.push(Check::le(
            format!("{} lower-bound violations", tag(*a)),
            r.violations() as f64,
            0.0,
        ));
    }

    let mut summary = json!({ "branches": serde_json::to_value(&rows)? });
    if let Some(c) = cfg.cubic {
        let err = cubic_closed_form_error(c.points, c.extent)?;
        checks.push(Check::le(
            "a=1 cubic closed form relative error",
            err,
            c.tolerance,
        ));
        summary["cubic_error"] = json!(err);
    }
    let mut windows = Vec::new();
    for w in &cfg.windows {
        let got = admissible_b(&DispersionParams::new(w.a)?);
        let t = tag(w.a);
        if w.empty {
            checks.push(Check::ge(
                format!("{t} b-window empty"),
                got.empty as u8 as f64,
                1.0,
            ));
        } else {
            checks.push(Check::le(
                format!("{t} b-window nonempty"),
                got.empty as u8 as f64,
                0.0,
            ));
            checks.push(Check::le(
                format!("{t} b-window lower end error"),
                (got.lo - w.lo).abs(),
                cfg.window_tolerance,
            ));
            checks.push(Check::le(
                format!("{t} b-window upper end error"),
                (got.hi - w.hi).abs(),
                cfg.window_tolerance,
            ));
        }
        windows.push(json!({ "a": w.a, "empty": got.empty, "lo": got.lo, "hi": got.hi }));
    }
    summary["windows"] = json!(windows);
    Ok(Outcome {
        files: vec![("resonance.csv".into(), csv_bytes(&rows)?)],
        summary,
        checks,
    })
}
