//! Numerical laboratory for the damped-driven stochastic KdV equation
//!
//! ```text
//! u_t - nu u_xx + u_xxx - 6 u u_x = sqrt(nu) eta(t, x),   x in [0, 2pi),
//! ```
//!
//! with zero-mean periodic data and smooth-in-x, white-in-time forcing,
//! together with the machinery needed to probe its slow-time action
//! dynamics empirically:
//!
//! - [`fourier`]: real trigonometric spectral fields with dealiased
//!   products and Sobolev norms.
//! - [`kdv`]: the deterministic flow and the stochastic integrator
//!   (exponential integrating factor + explicit nonlinearity +
//!   Euler-Maruyama noise).
//! - [`conserved`]: the conserved functionals `J_0..J_2` and forcing
//!   constants `B_r` used as balance diagnostics.
//! - [`hill`]: band edges and spectral gaps of `-y'' + u y`, with
//!   gap-quadratic and linearized action/angle estimators.
//! - [`averaging`]: the finite-dimensional slow-fast averaging engine:
//!   Haar/Kronecker angle averages, averaged (Whitham) coefficients and
//!   simulation, frequency nondegeneracy, and the Khasminskii drift-defect
//!   diagnostic, with exactly solvable catalog systems.
//! - [`harness`]: seeded ensemble experiments over a damping ladder,
//!   persistence, and statistical reports.
//! - [`stats`]: Kolmogorov-Smirnov, circular-moment, and correlation
//!   estimators used by the reports.

pub mod averaging;
pub mod conserved;
pub mod error;
pub mod fourier;
pub mod harness;
pub mod hill;
pub mod kdv;
pub mod noise;
pub mod stats;

pub use error::{AveragingError, FieldError, HarnessError, HillError, SolverError};
pub use fourier::SpectralField;
pub use noise::NoiseSpec;
