//! Spectral Galerkin discretization of the stochastic linear Schrödinger
//! equation on (0, π), the associated family of one-step temporal
//! integrators, and the large-deviations calculus for the time-averaged
//! observable u(T)/T.
//!
//! The crate is organized around the objects the theory is built from:
//!
//! * [`spectral`] — finite sequences of complex mode coefficients, the
//!   noise covariance spectrum, and the square-root / pseudo-inverse
//!   calculus on it.
//! * [`exact_law`] — the exact Gaussian law of the continuous and
//!   Galerkin-truncated solutions: closed-form means, variances,
//!   terminal-time samplers, and logarithmic moment generating functions.
//! * [`scheme`] — the 2×2 one-step integrator family (midpoint,
//!   exponential Euler, backward Euler–Maruyama, user tables), its
//!   structural assumptions, and exact moment propagation.
//! * [`rate`] — rate functions of the continuous, spatially
//!   semi-discrete, and fully discrete observables, closed-form Legendre
//!   transforms, the mass-tail rate, and the mode-truncation witness.
//! * [`monte_carlo`] — ensemble simulation with reproducible per-sample
//!   RNG streams, empirical LMGF and tail estimators, and the
//!   convergence studies connecting samples to the closed forms.
//!
//! All values are `f64`; rate functions take values in `[0, ∞]` via
//! [`rate::RateValue`].

pub mod error;
pub mod exact_law;
pub mod linalg;
pub mod monte_carlo;
pub mod rate;
pub mod scheme;
pub mod spectral;
pub mod stats;

pub use error::{CoreError, Result};
pub use rate::RateValue;
pub use scheme::Scheme;
pub use spectral::{NoiseSpec, SpectralVector};
