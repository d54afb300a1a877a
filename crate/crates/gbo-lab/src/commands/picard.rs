//! Picard iteration of the truncated Duhamel map and its diagnostics.

use anyhow::{bail, Context, Result};
use gbo_core::bourgain::norm_f;
use gbo_core::duhamel::{
    contraction_constant, contraction_sweep, duhamel_map, duhamel_residual, fixed_point_residual,
    linear_constant, picard_iterate, select_delta, solution_map_continuity, PicardSetup,
    PicardState, TimeCutoff,
};
use gbo_core::dynamics::{evolve, SolverConfig};
use gbo_core::{DispersionParams, RustFft, SpacetimeField, SpectralField};
use serde::Serialize;
use serde_json::json;

use super::rel_l2;
use crate::config::PicardConfig;
use crate::output::{csv_bytes, Check, Outcome};

#[derive(Serialize)]
struct Row {
    k: usize,
    d_k: f64,
    ratio: Option<f64>,
}

/// Spatial coefficients of `v` at time node `m`.
fn slice(fft: &RustFft, v: &SpacetimeField, m: usize) -> Result<SpectralField> {
    let data = v.to_spatial_coeffs_in_time(fft);
    let nt = v.nt();
    Ok(SpectralField::from_coeffs(
        v.xi_grid,
        (0..v.nx()).map(|i| data[i * nt + m]).collect(),
    )?)
}

/// Calibrate the ball on `u0` and iterate; zero data keeps the unit constant.
fn calibrated_run(
    fft: &RustFft,
    params: &DispersionParams,
    cut: &TimeCutoff,
    u0: &SpectralField,
    mut setup: PicardSetup,
) -> Result<(PicardSetup, PicardState)> {
    if u0.l2_norm() > 0.0 {
        setup.c_ball = linear_constant(fft, params, cut, u0, &setup)?;
    }
    let state = picard_iterate(fft, params, cut, u0, &setup)?;
    Ok((setup, state))
}

pub fn run(cfg: &PicardConfig) -> Result<Outcome> {
    let fft = RustFft::new();
    let params = DispersionParams::new(cfg.a)?;
    let mut u0 = cfg.initial.field(&fft, cfg.grid.grid()?);
    let f0 = norm_f(&fft, &params, &u0, params.s_star)?;
    if let Some(target) = cfg.data_norm {
        if f0 == 0.0 && target > 0.0 {
            bail!("zero initial data cannot be rescaled to F-norm {target}");
        }
        if f0 > 0.0 {
            u0 = u0.scaled(target / f0);
        }
    }
    let data_norm = norm_f(&fft, &params, &u0, params.s_star)?;
    let cut = TimeCutoff::new(cfg.delta)?;
    let base = PicardSetup {
        t_samples: cfg.t_samples,
        window_factor: cfg.window_factor,
        k_max: cfg.k_max,
        tolerance: cfg.tolerance,
        ..PicardSetup::new(&params)
    };
    let (setup, st) = calibrated_run(&fft, &params, &cut, &u0, base).context("main run")?;
    let tol = cfg.tolerances;
    let mut checks = vec![
        Check::ge("converged", st.converged as u8 as f64, 1.0),
        Check::le("max contraction ratio", st.max_ratio(), tol.max_ratio),
    ];

    let residual = fixed_point_residual(&fft, &params, &cut, &u0, &st.v)?;
    let phi = duhamel_map(&fft, &params, &cut, &u0, &st.v)?;
    let fd = duhamel_residual(&fft, &params, &cut, &st.v, &phi)?;
    checks.push(Check::lt(
        "fixed-point residual on |t| < delta/2",
        residual,
        tol.residual,
    ));
    checks.push(Check::lt(
        "differential residual on |t| < delta/2",
        fd,
        tol.residual,
    ));

    // Latest positive time node inside the inner half-window.
    let tg = st.v.t_grid;
    let m = (tg.len() / 2..tg.len())
        .rev()
        .find(|&m| tg.x(m) < cfg.delta / 2.0)
        .expect("the centre node is at t = 0");
    let t_cmp = tg.x(m);
    let stepped = evolve(&fft, &SolverConfig::new(params, cfg.evolve_dt, t_cmp), &u0)?;
    let evolve_err = rel_l2(&slice(&fft, &st.v, m)?, stepped.last());
    checks.push(Check::lt(
        format!("agreement with time stepping at t={t_cmp}"),
        evolve_err,
        tol.evolve,
    ));

    let mut higher = Vec::new();
    for &off in &cfg.regularity_offsets {
        let s = PicardSetup {
            s: params.s_star + off,
            ..base
        };
        let (_, hs) =
            calibrated_run(&fft, &params, &cut, &u0, s).with_context(|| format!("s = s*+{off}"))?;
        checks.push(Check::ge(
            format!("s=s*+{off} converged at the same delta"),
            hs.converged as u8 as f64,
            1.0,
        ));
        checks.push(Check::le(
            format!("s=s*+{off} max contraction ratio"),
            hs.max_ratio(),
            tol.max_ratio,
        ));
        higher.push(json!({ "offset": off, "steps": hs.k, "max_ratio": hs.max_ratio() }));
    }

    let mut summary = json!({
        "a": cfg.a,
        "delta": cfg.delta,
        "data_norm": data_norm,
        "c_ball": setup.c_ball,
        "a_ball": st.a_ball,
        "steps": st.k,
        "converged": st.converged,
        "diverged": st.diverged,
        "max_ratio": st.max_ratio(),
        "fixed_point_residual": residual,
        "differential_residual": fd,
        "evolve_time": t_cmp,
        "evolve_error": evolve_err,
        "higher_regularity": higher,
    });

    if let Some(c) = &cfg.continuity {
        let dir = c.direction.field(&fft, u0.grid);
        let rep = solution_map_continuity(&fft, &params, &cut, &u0, &dir, &c.sizes, &setup)?;
        checks.push(Check::le(
            "solution-map Lipschitz spread",
            rep.spread,
            c.max_spread,
        ));
        summary["continuity"] = serde_json::to_value(&rep)?;
    }
    if !cfg.delta_sweep.is_empty() {
        let sw = contraction_sweep(&fft, &params, &u0, &setup, &cfg.delta_sweep)?;
        checks.push(Check::gt(
            "contraction factor delta-exponent",
            sw.fit.slope,
            0.0,
        ));
        summary["delta_sweep"] = serde_json::to_value(&sw)?;
    }
    if let Some(rule) = cfg.delta_rule {
        let c_emp = contraction_constant(&fft, &params, &u0, &setup, rule.calibration, rule.theta)?;
        let chosen = select_delta(c_emp, rule.theta, st.a_ball)?;
        summary["delta_rule"] = json!({
            "theta": rule.theta,
            "calibration": rule.calibration,
            "c_emp": c_emp,
            "selected": chosen,
        });
    }

    let rows: Vec<Row> = st
        .diffs
        .iter()
        .enumerate()
        .map(|(k, &d)| Row {
            k,
            d_k: d,
            ratio: (k > 0).then(|| {
                if st.diffs[k - 1] > 0.0 {
                    d / st.diffs[k - 1]
                } else {
                    0.0
                }
            }),
        })
        .collect();
    Ok(Outcome {
        files: vec![("picard.csv".into(), csv_bytes(&rows)?)],
        summary,
        checks,
    })
}
