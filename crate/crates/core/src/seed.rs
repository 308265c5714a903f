//! Deterministic seed derivation for parallel and repeated tasks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The splitmix64 output function.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for task `task` under the run seed `seed`.
pub fn derive_seed(seed: u64, task: u64) -> u64 {
    splitmix64(splitmix64(seed) ^ task)
}

pub fn rng_for(seed: u64, task: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, task))
}
