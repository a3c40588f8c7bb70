//! Deterministic seed splitting.
//!
//! Every stochastic component receives its own 64-bit seed derived from a
//! master seed and a textual label, so that adding or removing one consumer
//! never shifts the random stream seen by another. The derivation is
//! `splitmix64(master ^ fnv1a64(label))`, and indexed children fold the index
//! in with a second splitmix64 round.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// One round of the splitmix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn fnv1a64(label: &str) -> u64 {
    label
        .bytes()
        .fold(FNV_OFFSET, |h, b| (h ^ u64::from(b)).wrapping_mul(FNV_PRIME))
}

/// Seed for the consumer named `label`.
pub fn derive(master: u64, label: &str) -> u64 {
    splitmix64(master ^ fnv1a64(label))
}

/// Seed for the `index`-th member of a family of consumers (trees, folds, chains).
pub fn derive_indexed(master: u64, label: &str, index: u64) -> u64 {
    splitmix64(derive(master, label) ^ splitmix64(index))
}

/// The RNG used throughout the crate. ChaCha8 is portable across platforms,
/// so a seed reproduces the same stream everywhere.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
