//! Seeded random streams.
//!
//! Every stochastic component takes an explicit stream. Child seeds are
//! derived from a master seed and a list of indices with a SplitMix64 mix, so
//! the stream a replicate sees never depends on scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The stream type used throughout the crate.
pub type Stream = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes `master` with each index in turn.
pub fn derive_seed(master: u64, indices: &[u64]) -> u64 {
    indices
        .iter()
        .fold(splitmix64(master), |acc, &i| splitmix64(acc ^ splitmix64(i.wrapping_add(0xA5A5_A5A5))))
}

pub fn stream(master: u64, indices: &[u64]) -> Stream {
    Stream::seed_from_u64(derive_seed(master, indices))
}
