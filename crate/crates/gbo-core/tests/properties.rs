//! Randomized structural properties of the core operators.

use gbo_core::bourgain::{norm_x, windowed_flow, DyadicDecomposition};
use gbo_core::resonance::resonance_fn;
use gbo_core::{Complex64, DispersionParams, RustFft, SpatialGrid, SpectralField};
use proptest::prelude::*;

fn field(coeffs: &[(f64, f64)]) -> SpectralField {
    let grid = SpatialGrid::new(coeffs.len(), 2.0 * std::f64::consts::PI).unwrap();
    let c = coeffs
        .iter()
        .map(|&(re, im)| Complex64::new(re, im))
        .collect();
    SpectralField::from_coeffs(grid, c).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn linear_group_law(
        a in 0.0f64..=1.0,
        s in -2.0f64..2.0,
        t in -2.0f64..2.0,
        coeffs in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 32),
    ) {
        let p = DispersionParams::new(a).unwrap();
        let u = field(&coeffs);
        let lhs = u.propagate(&p, t).propagate(&p, s);
        let rhs = u.propagate(&p, s + t);
        prop_assert!(lhs.max_abs_diff(&rhs) < 1e-12);
        // Unitary on every mode away from Nyquist.
        let back = u.propagate(&p, t).propagate(&p, -t);
        let mut trimmed = u.clone();
        trimmed.coeffs[u.grid.nyquist_slot()] = Complex64::new(0.0, 0.0);
        prop_assert!(back.max_abs_diff(&trimmed) < 1e-12);
    }

    #[test]
    fn layers_sum_to_one(z in -1.0e4f64..1.0e4) {
        let dec = DyadicDecomposition::covering(1.0e4);
        let total: f64 = dec.active(z).map(|(_, w)| w).sum();
        prop_assert!((total - 1.0).abs() < 1e-14);
        prop_assert!(dec.active(z).count() <= 2);
    }

    #[test]
    fn resonance_is_symmetric_and_vanishes_on_axes(
        a in 0.0f64..=1.0,
        x in -50.0f64..50.0,
        y in -50.0f64..50.0,
    ) {
        let p = DispersionParams::new(a).unwrap();
        prop_assert_eq!(resonance_fn(&p, x, y), resonance_fn(&p, y, x));
        prop_assert!(resonance_fn(&p, x, 0.0).abs() <= 1e-12 * (1.0 + x.abs().powf(2.0 + a)));
        // Odd symbol: Ω(−ξ₁, −ξ₂) = −Ω(ξ₁, ξ₂).
        prop_assert!((resonance_fn(&p, -x, -y) + resonance_fn(&p, x, y)).abs() < 1e-9 * (1.0 + (x.abs() + y.abs()).powf(2.0 + a)));
    }

    #[test]
    fn x_norm_is_homogeneous(k in 0.01f64..100.0, b in 0.0f64..1.0) {
        let fft = RustFft::new();
        let p = DispersionParams::new(0.5).unwrap();
        let xg = SpatialGrid::new(8, 2.0 * std::f64::consts::PI).unwrap();
        let tg = SpatialGrid::new(64, 8.0).unwrap();
        let u0 = SpectralField::from_fn(&fft, xg, |x| x.cos());
        let u = windowed_flow(&fft, &p, &u0, tg, gbo_core::bourgain::bump).unwrap();
        let n1 = norm_x(&p, &u, 0.5, b).unwrap();
        let nk = norm_x(&p, &u.scaled(k), 0.5, b).unwrap();
        prop_assert!((nk - k * n1).abs() <= 1e-12 * nk);
    }
}
