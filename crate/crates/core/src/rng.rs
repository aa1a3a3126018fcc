//! Seeded random streams.
//!
//! Every stochastic routine takes a `u64` seed and derives independent
//! sub-streams from it, so results never depend on call order elsewhere.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derive a child seed for the stream identified by `tags`.
pub fn derive(seed: u64, tags: &[u64]) -> u64 {
    let mut h = splitmix(seed ^ 0x9E37_79B9_7F4A_7C15);
    for &t in tags {
        h = splitmix(h ^ t.wrapping_mul(0xD6E8_FEB8_6659_FD93));
    }
    h
}

pub fn stream(seed: u64, tags: &[u64]) -> Rng {
    seeded(derive(seed, tags))
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
