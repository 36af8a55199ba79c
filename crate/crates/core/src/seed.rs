//! Counter-based seed derivation.
//!
//! Every random draw in the crate flows from an explicit `u64` seed. Derived
//! seeds are pure functions of `(master, indices...)`, so reordering work or
//! editing one sweep cell never shifts another cell's randomness.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finaliser.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for `(master, path[0], path[1], ...)`.
pub fn derive(master: u64, path: &[u64]) -> u64 {
    path.iter().fold(mix64(master.wrapping_add(GOLDEN)), |acc, &k| {
        mix64(acc ^ mix64(k.wrapping_add(GOLDEN).wrapping_mul(GOLDEN)))
    })
}

/// Seed of trial `trial` in sweep cell `cell`.
pub fn trial_seed(master: u64, cell: usize, trial: usize) -> u64 {
    derive(master, &[cell as u64, trial as u64])
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
