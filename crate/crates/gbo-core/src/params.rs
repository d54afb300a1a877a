use serde::{Deserialize, Serialize};

use crate::error::{bail, Result};

/// The dispersion exponent `a` and every index derived from it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DispersionParams {
    pub a: f64,
    /// Sobolev index `(1+a)/2`.
    pub s_star: f64,
    /// Strichartz modulation exponent `(3+a)/(4(2+a))`.
    pub b0: f64,
    /// Scaling index as stated for the family, `1/2 − a`.
    ///
    /// The dilation `σ^{1+a} u(σx, σ^{2+a}t)` leaves `Ḣ^{−1/2−a}` invariant,
    /// which is [`DispersionParams::dilation_invariant_index`].
    pub scaling_index: f64,
}

/// Open interval of admissible modulation exponents `b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BWindow {
    pub lo: f64,
    pub hi: f64,
    pub empty: bool,
}

impl BWindow {
    pub fn contains(&self, b: f64) -> bool {
        !self.empty && b > self.lo && b < self.hi
    }
}

impl DispersionParams {
    pub fn new(a: f64) -> Result<Self> {
        if !a.is_finite() || !(0.0..=1.0).contains(&a) {
            bail!(Config, "dispersion exponent a = {a} outside [0, 1]");
        }
        Ok(Self {
            a,
            s_star: (1.0 + a) / 2.0,
            b0: (3.0 + a) / (4.0 * (2.0 + a)),
            scaling_index: 0.5 - a,
        })
    }

    /// Lower endpoint `(1−a)/(2(1+a))` coming from the high-low interaction.
    pub fn b_resonant_floor(&self) -> f64 {
        (1.0 - self.a) / (2.0 * (1.0 + self.a))
    }

    /// `(max(b0, (1−a)/(2(1+a))), 1/2)`; empty when the lower end reaches 1/2.
    pub fn b_window(&self) -> BWindow {
        let lo = self.b0.max(self.b_resonant_floor());
        let hi = 0.5;
        BWindow {
            lo,
            hi,
            empty: lo >= hi,
        }
    }

    /// Homogeneous Sobolev index preserved by the dilation symmetry.
    pub fn dilation_invariant_index(&self) -> f64 {
        -0.5 - self.a
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_range() {
        assert!(DispersionParams::new(-0.1).is_err());
        assert!(DispersionParams::new(1.5).is_err());
        assert!(DispersionParams::new(f64::NAN).is_err());
    }

    #[test]
    fn derived_indices() {
        for &a in &[0.0, 0.3, 0.5, 1.0] {
            let p = DispersionParams::new(a).unwrap();
            assert_eq!(p.s_star, (1.0 + a) / 2.0);
            assert!(p.b0 > 0.0 && p.b0 < 0.5);
        }
    }

    #[test]
    fn window_endpoints() {
        let w = DispersionParams::new(0.0).unwrap().b_window();
        assert!(w.empty);
        let w = DispersionParams::new(0.5).unwrap().b_window();
        assert!(!w.empty);
        assert!((w.lo - 0.35).abs() < 1e-12 && (w.hi - 0.5).abs() < 1e-12);
        let w = DispersionParams::new(1.0).unwrap().b_window();
        assert!((w.lo - 1.0 / 3.0).abs() < 1e-12);
        for i in 1..100 {
            let a = i as f64 / 100.0;
            assert!(
                !DispersionParams::new(a).unwrap().b_window().empty,
                "a = {a}"
            );
        }
    }
}
