//! Spectral numerics for the dispersion-generalized Benjamin–Ono family
//!
//! ```text
//! ∂t u + ∂x D^{1+a} u + ½ ∂x(u²) = 0,   0 ≤ a ≤ 1
//! ```
//!
//! The crate builds without `std` (it needs `alloc`). Every routine that
//! transforms data takes a [`FftProvider`]; the `std` feature (on by
//! default) supplies [`RustFft`], backed by `rustfft`.
//!
//! Fourier convention everywhere: `f̂(ξ) = ∫ e^{ixξ} f(x) dx`, so
//! `F(∂x f) = −iξ f̂` and the linear group multiplies by `e^{iω(ξ)t}`.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod bourgain;
pub mod duhamel;
pub mod dynamics;
mod error;
pub mod fft;
pub mod grid;
pub(crate) mod math;
pub mod params;
pub mod resonance;
pub mod rng;
pub mod spacetime;
pub mod spectral;
pub mod xlab;

pub use error::{Error, Result};
#[cfg(feature = "std")]
pub use fft::RustFft;
pub use fft::{Direction, FftProvider};
pub use grid::SpatialGrid;
pub use params::{BWindow, DispersionParams};
pub use spacetime::SpacetimeField;
pub use spectral::{omega, omega_prime, SpectralField};

pub use num_complex::Complex64;
