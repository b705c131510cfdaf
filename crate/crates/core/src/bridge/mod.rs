//! Wiener–Liouville bridge, Girsanov weights and the bridge representation
//! of transition and stationary densities.
//!
//! Conventions: B̃_t = ρ∫₀ᵗ(t−u)^{H−1/2}dW_u with ρ = 1/α_H, so each
//! component of B̃_{t0} has variance ρ²t0^{2H}/(2H); the Gaussian factor of
//! every density is this law written in standard form. The Girsanov
//! integrand carries the factor 1/Γ(H+1/2) that makes ρΓ(H+1/2)𝒥^{H+1/2}
//! the inverse of the shift it removes.

mod girsanov;
mod reference;
mod sampler;
mod stationary;

pub use girsanov::{
    endpoint_for, gaussian_prefactor, girsanov_exponent, girsanov_factor, girsanov_l, girsanov_weights, transition_density, DensityPoint,
    GirsanovEstimate, GirsanovIntegrand, HEAVY_TAIL_SHARE,
};
pub use reference::{liouville_covariance, LiouvilleSampler};
pub use sampler::{sample_bridge, BridgePath, BridgeSampler, BridgeSpec, BRIDGE_TAG};
pub use stationary::{harvest_history, stationary_density_via_bridge, HarvestConfig, HarvestReport, HistorySample, StationaryDensity, BULK_FRACTION, HISTORY_TAG, MIN_HISTORY};
