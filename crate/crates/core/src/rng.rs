//! Counter-based random streams.
//!
//! Every replicate draws from its own ChaCha8 stream selected by
//! `(master_seed, stream_id)`, so results never depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub type Rng = ChaCha8Rng;

/// Short description of the splitting scheme, echoed into run manifests.
pub const SPLITTING_SCHEME: &str = "chacha8: key = seed_from_u64(master), stream = (a << 32) | b";

pub fn stream(master: u64, id: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(id);
    rng
}

/// Stream for a two-level index, e.g. (replicate, component).
pub fn stream2(master: u64, a: u32, b: u32) -> Rng {
    stream(master, ((a as u64) << 32) | b as u64)
}

pub fn normal(rng: &mut Rng) -> f64 {
    StandardNormal.sample(rng)
}

pub fn fill_normal(rng: &mut Rng, out: &mut [f64]) {
    for v in out.iter_mut() {
        *v = StandardNormal.sample(rng);
    }
}
