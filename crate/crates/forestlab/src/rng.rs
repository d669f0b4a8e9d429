//! Deterministic seed derivation.
//!
//! Every randomized component draws from a [`ChaCha8Rng`] seeded through
//! [`derive_seed`], so results are fixed by `(parameters, master seed)` alone
//! and never depend on scheduling or worker count.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Derive the seed of an independent random stream from a master seed.
///
/// Uses the SplitMix64 finalizer, which maps distinct `(master, stream)`
/// pairs to well-mixed seeds. The mapping is part of the crate's
/// reproducibility contract and must not change between versions.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    let mut z = master ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a seed from a master seed and two stream labels.
pub fn derive_seed2(master: u64, stream_a: u64, stream_b: u64) -> u64 {
    derive_seed(derive_seed(master, stream_a), stream_b)
}

/// Construct the crate-standard RNG for a seed.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Stream labels keeping unrelated consumers of one master seed apart.
pub mod streams {
    /// Per-tree fitting stream; add the tree index.
    pub const TREE: u64 = 0x1000_0000_0000_0000;
    /// Per-arm stream; add the arm label.
    pub const ARM: u64 = 0x2000_0000_0000_0000;
    /// Fallback forest of an armed forest.
    pub const FALLBACK: u64 = 0x3000_0000_0000_0000;
    /// Training-sample stream of an experiment.
    pub const TRAIN: u64 = 0x4000_0000_0000_0000;
    /// Test-sample stream of an experiment.
    pub const TEST: u64 = 0x5000_0000_0000_0000;
    /// Permutation-importance stream; combine with variable and repetition.
    pub const PERMUTATION: u64 = 0x6000_0000_0000_0000;
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngCore;

    #[test]
    fn derived_seeds_are_stable() {
        // Frozen values: changing them silently would break reproducibility
        // of every recorded experiment.
        assert_eq!(derive_seed(0, 0), 16294208416658607535);
        assert_eq!(derive_seed(42, streams::TREE), 6315214536026141600);
        assert_eq!(derive_seed2(7, 1, 2), derive_seed(derive_seed(7, 1), 2));
    }

    #[test]
    fn distinct_streams_do_not_collide() {
        let seeds: Vec<u64> = (0..1000u64).map(|t| derive_seed(9, streams::TREE + t)).collect();
        let mut sorted = seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), seeds.len());
    }

    #[test]
    fn rng_streams_reproduce() {
        let mut a = rng_from_seed(derive_seed(1, 2));
        let mut b = rng_from_seed(derive_seed(1, 2));
        for _ in 0..16 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }
}
