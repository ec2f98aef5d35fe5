//! Seed derivation.
//!
//! Every random stream in the crate is a `ChaCha8Rng` keyed by a master seed
//! mixed with a short list of tags (stage, iteration, chunk index, ...). Work
//! is split into fixed-size chunks before it is handed to rayon, so results
//! do not depend on the number of worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Number of consecutive work items that share one RNG stream.
pub const CHUNK: usize = 1024;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a master seed with a sequence of tags into a new 64-bit seed.
pub fn derive_seed(master: u64, tags: &[u64]) -> u64 {
    tags.iter()
        .fold(splitmix64(master), |acc, &t| splitmix64(acc ^ splitmix64(t)))
}

pub fn stream(master: u64, tags: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, tags))
}

// Stage tags, so that e.g. graph generation and tree sampling never share a stream.
pub const TAG_GRAPH: u64 = 0x4752_4150;
pub const TAG_TREE: u64 = 0x5452_4545;
pub const TAG_RDE: u64 = 0x5244_4500;
pub const TAG_ROOT: u64 = 0x524F_4F54;
pub const TAG_PRIME: u64 = 0x5052_494D;
