//! Stationary-law estimation: long-run histograms, ball masses, the fOU
//! covariance, the σ-rescaling comparison and Gaussian-tail fits.

mod density;
mod fou;
mod rescale;
mod tail;

pub use density::{
    collect_states, estimate_invariant_density, geweke_z, mass_in_ball, DensityConfig, DensityEstimate, Provenance, MAX_BINS, MAX_OUTSIDE,
};
pub use fou::fou_covariance;
pub use rescale::{ball_mass_time_average, rescale_density_check, RescaleReport};
pub use tail::{tail_fit, TailFit};
