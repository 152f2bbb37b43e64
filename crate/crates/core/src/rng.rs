//! Seeding policy: one master seed, counter-split sub-seeds.
//!
//! Every randomized routine takes a `u64` seed. Orchestration derives
//! per-task seeds from a single configured master seed with
//! [`subseed`]`(master, stream)`, where `stream` is a fixed enumeration of
//! the task (scan point index, sample index, ...). The split is a SplitMix64
//! step of `master XOR (golden * (stream + 1))`, so distinct streams give
//! decorrelated generators and reruns are bit-reproducible.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// One round of SplitMix64.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic sub-seed for task `stream` under `master`.
pub fn subseed(master: u64, stream: u64) -> u64 {
    splitmix64(master ^ 0x9E37_79B9_7F4A_7C15u64.wrapping_mul(stream.wrapping_add(1)))
}

/// The crate's standard seeded generator.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
