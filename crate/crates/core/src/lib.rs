//! Electron matter-wave diffraction past a magnetic flux line.
//!
//! The crate has five layers:
//!
//! * [`specfn`]: Dawson function, `erfi`, Gauss-Legendre quadrature.
//! * [`analytic`]: the closed-form paraxial amplitude `c(alpha, theta)` and
//!   the average deflection `sin(2 pi alpha) / (w sqrt(pi))`.
//! * [`wavefield`]: grids, beam parameters and the initial states.
//! * [`propagator`]: direct path-integral summation and an FFT far-field
//!   route.
//! * [`analysis`]: deflection, asymmetry, quantum potential, partial
//!   coherence and momentum-space tests.

pub mod analysis;
pub mod analytic;
pub mod constants;
pub mod error;
pub mod propagator;
pub mod specfn;
pub mod summation;
pub mod wavefield;

pub use error::{Error, Result};
