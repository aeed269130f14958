//! Independent RNG streams derived from one experiment seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for item `index` of stream `stream` under `seed`.
pub fn derive_seed(seed: u64, stream: u64, index: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(seed) ^ stream) ^ index)
}

pub fn rng_for(seed: u64, stream: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, stream, index))
}

/// Named streams, so adding a consumer never shifts another's numbers.
pub mod stream {
    pub const LABELED_SAMPLER: u64 = 1;
    pub const AUGMENT: u64 = 2;
    pub const PSEUDO_ORDER: u64 = 3;
    pub const UNLABELED_SUBSET: u64 = 4;
    pub const GEN_IMAGE: u64 = 5;
    pub const GEN_LABELS: u64 = 6;
    pub const GEN_SPLIT: u64 = 7;
}
