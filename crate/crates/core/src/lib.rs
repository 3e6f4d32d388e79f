//! Discretized time-frequency analysis on uniform periodic grids.
//!
//! The crate provides weighted Lebesgue, Wiener-amalgam and modulation
//! quasi-norms, short-time Fourier and symplectic Fourier transforms,
//! twisted convolution, a discretized Weyl/Kohn-Nirenberg calculus with
//! Schatten norms, and a constructive Hewitt-style factorization engine
//! over convolution, twisted-convolution and operator-composition
//! algebra/module pairs.

pub mod amalgam;
pub mod factor;
pub mod field;
pub mod fft;
pub mod grid;
pub mod timefreq;
pub mod twist;
pub mod weight;
pub mod weyl;

mod error;

pub use error::{Error, Result};
pub use field::{Exponent, QuasiNormParams, SampledField};
pub use grid::{Axis, GridSpec};
pub use weight::Weight;

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
