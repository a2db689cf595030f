//! Seed derivation. Every random stream in the crate is a ChaCha8 generator
//! whose seed is derived from an explicit base seed plus a path of labels.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mix a base seed with a sequence of labels into a new 64-bit seed.
pub fn derive_seed(base: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(base), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

/// Stable 64-bit label for a string, used to derive per-stage seeds.
pub fn label(s: &str) -> u64 {
    // FNV-1a
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

pub fn stream(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn substream(base: u64, path: &[u64]) -> SimRng {
    stream(derive_seed(base, path))
}
