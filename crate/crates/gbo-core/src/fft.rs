//! Transform providers.
//!
//! Providers compute unnormalized discrete transforms in batches of
//! contiguous rows. [`Direction::Forward`] is `Σ_n e^{−2πink/n} x_n`,
//! [`Direction::Inverse`] is `Σ_n e^{+2πink/n} x_n`. Normalization and the
//! physical-to-coefficient convention live in [`crate::spectral`].

use alloc::vec::Vec;
use num_complex::Complex64;

use crate::math::{cis, PI};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

/// A batch transform. Implementations must be safe to share across
/// threads: either internally synchronized or free of mutable state.
pub trait FftProvider: Sync {
    /// Transform each consecutive chunk of `len` entries of `data` in place.
    fn process(&self, data: &mut [Complex64], len: usize, dir: Direction);
}

/// `O(n²)` direct transform. Reference oracle and `no_std` fallback.
#[derive(Debug, Default, Clone, Copy)]
pub struct DirectDft;

impl FftProvider for DirectDft {
    fn process(&self, data: &mut [Complex64], len: usize, dir: Direction) {
        assert!(len > 0 && data.len() % len == 0, "batch length mismatch");
        let sign = match dir {
            Direction::Forward => -1.0,
            Direction::Inverse => 1.0,
        };
        let twiddles: Vec<Complex64> = (0..len)
            .map(|m| cis(sign * 2.0 * PI * m as f64 / len as f64))
            .collect();
        let mut out = alloc::vec![Complex64::new(0.0, 0.0); len];
        for chunk in data.chunks_mut(len) {
            for (k, o) in out.iter_mut().enumerate() {
                let mut acc = Complex64::new(0.0, 0.0);
                for (n, x) in chunk.iter().enumerate() {
                    acc += x * twiddles[(n * k) % len];
                }
                *o = acc;
            }
            chunk.copy_from_slice(&out);
        }
    }
}

#[cfg(feature = "std")]
mod rust_fft {
    use super::*;
    use std::sync::Mutex;

    /// `rustfft`-backed provider with a shared, lock-protected plan cache.
    pub struct RustFft {
        planner: Mutex<rustfft::FftPlanner<f64>>,
    }

    impl Default for RustFft {
        fn default() -> Self {
            Self::new()
        }
    }

    impl RustFft {
        pub fn new() -> Self {
            Self {
                planner: Mutex::new(rustfft::FftPlanner::new()),
            }
        }
    }

    impl core::fmt::Debug for RustFft {
        fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
            f.write_str("RustFft")
        }
    }

    impl FftProvider for RustFft {
        fn process(&self, data: &mut [Complex64], len: usize, dir: Direction) {
            assert!(len > 0 && data.len() % len == 0, "batch length mismatch");
            let plan = {
                let mut planner = self.planner.lock().unwrap_or_else(|e| e.into_inner());
                match dir {
                    Direction::Forward => planner.plan_fft_forward(len),
                    Direction::Inverse => planner.plan_fft_inverse(len),
                }
            };
            plan.process(data);
        }
    }
}

#[cfg(feature = "std")]
pub use rust_fft::RustFft;

#[cfg(all(test, feature = "std"))]
mod tests {
    use super::*;

    #[test]
    fn rustfft_matches_direct() {
        let n = 24;
        let data: Vec<Complex64> = (0..2 * n)
            .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 1.1).cos()))
            .collect();
        for dir in [Direction::Forward, Direction::Inverse] {
            let mut a = data.clone();
            let mut b = data.clone();
            DirectDft.process(&mut a, n, dir);
            RustFft::new().process(&mut b, n, dir);
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).norm() < 1e-11);
            }
        }
    }
}
