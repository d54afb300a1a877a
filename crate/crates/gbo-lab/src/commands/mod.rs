//! One module per verb. Each turns a validated config into an [`Outcome`].

mod cutoffs;
mod norms;
mod picard;
mod resonance;
mod simulate;
mod xfail;

use anyhow::Result;
use gbo_core::SpectralField;

use crate::config::{Experiment, RunConfig};
use crate::output::Outcome;

pub fn dispatch(config: &RunConfig) -> Result<Outcome> {
    match &config.experiment {
        Experiment::Simulate(c) => simulate::run(c),
        Experiment::Norms(c) => norms::run(c, config.seed),
        Experiment::Resonance(c) => resonance::run(c, config.seed),
        Experiment::Xfail(c) => xfail::run(c),
        Experiment::Picard(c) => picard::run(c),
        Experiment::Cutoffs(c) => cutoffs::run(c),
    }
}

/// `‖u − v‖ / ‖v‖`, or the absolute difference when `v` vanishes.
fn rel_l2(u: &SpectralField, v: &SpectralField) -> f64 {
    let d = u.sub(v).l2_norm();
    let n = v.l2_norm();
    if n > 0.0 {
        d / n
    } else {
        d
    }
}

/// Label for per-`a` checks and files.
fn tag(a: f64) -> String {
    format!("a={a}")
}
