//! Seeded random streams.
//!
//! Everything random in the crate draws from ChaCha8 so results are
//! reproducible across platforms. Independent work items (table cells, sample
//! members) get their own stream of the same seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type CodeRng = ChaCha8Rng;

/// Name reported in trace headers.
pub const RNG_NAME: &str = "chacha8";

pub fn seeded(seed: u64) -> CodeRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Stream `stream` of `seed`.
pub fn stream(seed: u64, stream: u64) -> CodeRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
