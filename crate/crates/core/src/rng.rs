//! Seed-derived named random streams, one per simulation concern, so that
//! changing the traffic pattern never perturbs the mobility walk.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent stream identifiers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Mobility = 1,
    Traffic = 2,
    Control = 3,
}

/// Deterministic generator for `(seed, stream)`.
pub fn stream(seed: u64, which: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(which as u64);
    rng
}
