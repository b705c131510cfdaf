//! Numerics for stochastic differential equations driven by additive
//! fractional Brownian noise.
//!
//! * [`noise`]: exact fBm sampling and the Wiener-path operators (moving-average
//!   operator, concatenation and shifts, history operator, Liouville fBm).
//! * [`fraccalc`]: Riemann–Liouville fractional integrals and regularised derivatives.
//! * [`flow`]: drift library, pathwise Heun solver, tangent flow, cocycle checks.
//! * [`lyapunov`]: top Lyapunov exponent, λ⁺ bound, σ sweeps, stability probe.
//! * [`measure`]: invariant-density histograms, fOU covariance, rescaling checks.
//! * [`bridge`]: Wiener–Liouville bridge, Girsanov weights, bridge densities.

// `!(x > 0.0)` rejects NaN on purpose; quadrature tables keep their published digits.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod bridge;
pub mod error;
pub mod flow;
pub mod fraccalc;
pub mod kernel;
pub mod lyapunov;
pub mod measure;
pub mod noise;
pub mod path;
pub mod quad;
pub mod rng;
pub mod sim;
pub mod stats;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub use error::{Error, Result};
pub use path::{Path, PastPath};
