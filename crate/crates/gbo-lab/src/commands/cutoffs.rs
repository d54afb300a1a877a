//! Scale sweeps of time cutoffs in the modulation-weighted norms.

use anyhow::{anyhow, Context, Result};
use gbo_core::duhamel::{cutoff_lemma_sweep, windowed_family, LemmaReport};
use gbo_core::{DispersionParams, RustFft, SpatialGrid};
use rayon::prelude::*;
use serde_json::json;

use crate::config::{CutoffsConfig, LemmaExpectation, LemmaSweep};
use crate::output::{json_bytes, Check, Outcome};

fn sweep(cfg: &CutoffsConfig, s: &LemmaSweep) -> Result<LemmaReport> {
    let fft = RustFft::new();
    let params = DispersionParams::new(cfg.a)?;
    let u0 = cfg.initial.field(&fft, cfg.grid.grid()?);
    let tg = SpatialGrid::new(s.t_samples, cfg.t_length)?;
    let [w0, w1] = s.width_exponents;
    let widths: Vec<f64> = (w0..=w1).map(|k| 2f64.powi(-k)).collect();
    let family = windowed_family(&fft, &params, &u0, tg, &widths)?;
    let [d0, d1] = s.delta_exponents;
    let deltas: Vec<f64> = (d0..=d1).map(|k| 2f64.powi(-(k as i32))).collect();
    Ok(cutoff_lemma_sweep(
        &fft, &params, &family, &s.lemma, &deltas,
    )?)
}

pub fn run(cfg: &CutoffsConfig) -> Result<Outcome> {
    let reports: Vec<LemmaReport> = cfg
        .sweeps
        .par_iter()
        .map(|s| sweep(cfg, s).with_context(|| s.label.clone()))
        .collect::<Result<_>>()?;
    let mut files = Vec::new();
    let mut checks = Vec::new();
    let mut summary = Vec::new();
    for (s, rep) in cfg.sweeps.iter().zip(&reports) {
        files.push((format!("{}.json", s.label), json_bytes(rep)?));
        for e in &s.expect {
            match *e {
                LemmaExpectation::Flat { max_spread } => checks.push(Check::le(
                    format!("{} spread about the mean", s.label),
                    rep.spread,
                    max_spread,
                )),
                LemmaExpectation::TailSlope { target, tolerance } => {
                    let tail = rep.tail_fit.ok_or_else(|| {
                        anyhow!("{}: fewer than 4 scales at or below 1/8", s.label)
                    })?;
                    checks.push(Check::le(
                        format!("{} tail slope |{:.4} - {target}|", s.label, tail.slope),
                        (tail.slope - target).abs(),
                        tolerance,
                    ));
                }
                LemmaExpectation::SlopeAbove { limit } => checks.push(Check::gt(
                    format!("{} slope", s.label),
                    rep.fit.slope,
                    limit,
                )),
            }
        }
        summary.push(json!({
            "label": s.label,
            "slope": rep.fit.slope,
            "tail_slope": rep.tail_fit.map(|f| f.slope),
            "spread": rep.spread,
        }));
    }
    Ok(Outcome {
        files,
        summary: json!({ "a": cfg.a, "sweeps": summary }),
        checks,
    })
}
