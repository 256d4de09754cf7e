//! Keyed random streams.
//!
//! Every random quantity is addressed by a key, and its value depends only on
//! `(seed, key)`. Matrices are therefore identical however their entries are
//! scheduled across threads.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer.
pub const fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Folds `parts` into one seed; different orderings give different seeds.
pub fn derive_seed(parts: &[u64]) -> u64 {
    parts.iter().fold(0x6a09_e667_f3bc_c909, |acc, &p| {
        mix64(acc ^ mix64(p.wrapping_add(0x9e37_79b9_7f4a_7c15)))
    })
}

/// A seeded family of independent ChaCha8 streams.
#[derive(Debug, Clone)]
pub struct StreamFamily {
    base: ChaCha8Rng,
}

impl StreamFamily {
    pub fn new(seed: u64) -> Self {
        Self {
            base: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// A fresh generator positioned at the start of stream `key`.
    pub fn stream(&self, key: u64) -> ChaCha8Rng {
        let mut rng = self.base.clone();
        rng.set_stream(key);
        rng.set_word_pos(0);
        rng
    }
}

/// Stream key of entry `(i, j)` of block `A_s`.
pub fn entry_key(s: usize, i: usize, j: usize) -> u64 {
    debug_assert!(i < 1 << 16 && j < 1 << 16 && s < 1 << 32);
    ((s as u64) << 32) | ((i as u64) << 16) | j as u64
}

/// Uniform draw from `[0, 1)` with 53 random bits.
pub fn unit_f64<R: RngCore>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}
