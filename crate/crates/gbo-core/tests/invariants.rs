//! Symmetry and conservation properties of the nonlinear flow.

use std::f64::consts::PI;

use gbo_core::dynamics::{conserved, evolve, richardson_order, scale_solution, SolverConfig};
use gbo_core::{DispersionParams, RustFft, SpatialGrid, SpectralField};

fn data(fft: &RustFft, n: usize) -> SpectralField {
    let g = SpatialGrid::new(n, 2.0 * PI).unwrap();
    SpectralField::from_fn(fft, g, |x| 0.1 * x.sin() + 0.05 * (2.0 * x).cos() + 0.02)
}

#[test]
fn dilation_preserves_the_negative_index_seminorm() {
    let fft = RustFft::new();
    let u = data(&fft, 64);
    for a in [0.0, 0.25, 0.5, 1.0] {
        let params = DispersionParams::new(a).unwrap();
        let s = params.dilation_invariant_index();
        let scaled = scale_solution(&params, &u, 2.0).unwrap();
        let (before, after) = (u.homogeneous_seminorm(s), scaled.homogeneous_seminorm(s));
        assert!(
            (after / before - 1.0).abs() < 1e-12,
            "a = {a}: {before} vs {after}"
        );
        // The positive index 1/2 − a is not preserved.
        let off = 0.5 - a;
        let r = scaled.homogeneous_seminorm(off) / u.homogeneous_seminorm(off);
        assert!((r - 1.0).abs() > 0.1, "a = {a}: ratio {r}");
    }
}

#[test]
fn hamiltonian_is_conserved_but_the_summed_energy_is_not() {
    let fft = RustFft::new();
    let params = DispersionParams::new(0.5).unwrap();
    let u0 = data(&fft, 64);
    let traj = evolve(&fft, &SolverConfig::new(params, 1e-3, 1.0), &u0).unwrap();
    let (c0, c1) = (
        conserved(&fft, &params, &u0),
        conserved(&fft, &params, traj.last()),
    );
    assert!(((c1.hamiltonian() - c0.hamiltonian()) / c0.hamiltonian()).abs() < 1e-10);
    assert!(((c1.i3 - c0.i3) / c0.i3).abs() > 1e-3);
}

#[test]
fn integrating_factor_rk4_converges_at_fourth_order() {
    let fft = RustFft::new();
    let params = DispersionParams::new(0.5).unwrap();
    let u0 = data(&fft, 32).scaled(10.0);
    let run = |dt: f64| {
        evolve(&fft, &SolverConfig::new(params, dt, 0.5), &u0)
            .unwrap()
            .last()
            .clone()
    };
    let order = richardson_order(&run(0.02), &run(0.01), &run(0.005));
    assert!((order - 4.0).abs() < 0.3, "observed order {order}");
}
