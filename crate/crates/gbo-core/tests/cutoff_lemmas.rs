//! Scale behaviour of time cutoffs in the modulation-weighted norms.

use gbo_core::duhamel::{cutoff_lemma_sweep, windowed_family, CutoffLemma, LemmaNorm};
use gbo_core::{DispersionParams, RustFft, SpatialGrid, SpectralField};

fn family(nt: usize, narrowest: i32) -> (RustFft, DispersionParams, Vec<gbo_core::SpacetimeField>) {
    let fft = RustFft::new();
    let params = DispersionParams::new(0.5).unwrap();
    let xg = SpatialGrid::new(16, 2.0 * std::f64::consts::PI).unwrap();
    let u0 = SpectralField::from_fn(&fft, xg, |x| x.cos() + 0.5 * (2.0 * x).sin());
    let tg = SpatialGrid::new(nt, 8.0).unwrap();
    let widths: Vec<f64> = (-1..=narrowest).map(|k| 2f64.powi(-k)).collect();
    let fam = windowed_family(&fft, &params, &u0, tg, &widths).unwrap();
    (fft, params, fam)
}

fn dyadic(lo: i32) -> Vec<f64> {
    (0..=lo).map(|k| 2f64.powi(-k)).collect()
}

#[test]
fn above_one_half_the_cutoff_costs_delta_to_one_half_minus_b() {
    let (fft, params, fam) = family(32768, 9);
    let lemma = CutoffLemma {
        norm: LemmaNorm::TildeX,
        s: 0.0,
        b: 0.75,
        b_source: 0.75,
    };
    let rep = cutoff_lemma_sweep(&fft, &params, &fam, &lemma, &dyadic(8)).unwrap();
    let tail = rep.tail_fit.expect("six scales below 1/8");
    assert!((tail.slope - (0.5 - 0.75)).abs() <= 0.05, "{rep:?}");
    // Ratios grow monotonically as the window shrinks.
    assert!(rep.ratios.windows(2).all(|w| w[1] >= w[0] - 1e-12));
}

#[test]
fn below_one_half_the_cutoff_gains_a_power_of_delta() {
    let (fft, params, fam) = family(8192, 7);
    let lemma = CutoffLemma {
        norm: LemmaNorm::X,
        s: 0.0,
        b: 0.4,
        b_source: 0.5,
    };
    let rep = cutoff_lemma_sweep(&fft, &params, &fam, &lemma, &dyadic(6)).unwrap();
    assert!(rep.fit.slope > 0.0, "{rep:?}");
    let theta = rep.tail_fit.unwrap().slope;
    assert!((theta - 0.1).abs() <= 0.05, "theta {theta}");
}

#[test]
fn at_one_half_growth_is_slower_than_any_power() {
    let (fft, params, fam) = family(8192, 7);
    let lemma = CutoffLemma {
        norm: LemmaNorm::X,
        s: 0.0,
        b: 0.5,
        b_source: 0.5,
    };
    let rep = cutoff_lemma_sweep(&fft, &params, &fam, &lemma, &dyadic(6)).unwrap();
    assert!(rep.fit.slope > -0.05, "{rep:?}");
    assert!(rep.spread < 0.1);
}
