//! Deterministic random streams derived from a single master seed.
//!
//! Every consumer asks for a stream id; the generator is ChaCha keyed by the
//! master seed with the id as its stream counter, so streams never overlap.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

pub fn stream(master: u64, id: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(id);
    rng
}

/// Stream ids used across the crate.
pub mod ids {
    pub const PROBLEM_DATA: u64 = 1;
    pub const HARD_INSTANCE: u64 = 2;
    pub const SMOOTHING: u64 = 3;
    pub const TRAJECTORIES: u64 = 4;
}
