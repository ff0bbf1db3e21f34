use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;

/// Root generator for a run.
pub fn root_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derives an independent child generator from `(root_seed, index)`.
///
/// Samples, sweep points, and training stages each own a child generator so
/// that output is order-independent and reproducible. SplitMix64 mixing keeps
/// nearby indices decorrelated.
pub fn child_rng(root_seed: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(split_mix(root_seed ^ split_mix(index)))
}

fn split_mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

// rand_chacha re-exports rand_core; use the same version rand 0.8 uses.
use rand_chacha::rand_core;
