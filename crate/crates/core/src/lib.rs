//! Exact Gaussian dynamics of a harmonic oscillator coupled to a bosonic
//! bath through both position and momentum (q - mu p), with time-local
//! master-equation coefficients and a finite-bath validator.
//!
//! Units are natural: hbar = m = omega_S = 1 unless the parameter records say
//! otherwise; mu is reported as the dimensionless m*mu*omega_S.

pub mod bath;
pub mod convolve;
pub mod error;
pub mod greens;
pub mod grid;
pub mod mastereq;
pub mod moments;
pub mod oracle;
pub mod params;
pub mod quad;
pub mod special;

pub use error::{Error, Result};
