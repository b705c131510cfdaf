//! Fractional noise: fBm sampling and the Wiener-path operators that build
//! fBm from past and future Wiener increments.

mod fbm;
mod model;
mod norm;
mod ops;

pub use fbm::{sample_fbm, sample_fbm_replicate, FbmSampler};
pub use model::{alpha_h, NoiseModel, SigmaClass};
pub use norm::bnorm;
pub use ops::{
    concat_p, history_operator, liouville_fbm, mvn_operator, mvn_value, shift_theta, shift_vartheta,
    tail_estimate, two_sided_fbm, OperatorOptions, Traced,
};
