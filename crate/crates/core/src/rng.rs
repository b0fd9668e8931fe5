//! Deterministic seed derivation and counter-based sample streams.
//!
//! Trials, per-instance generators, and per-pair fading draws are all keyed
//! off a single user seed. Keys are derived with the SplitMix64 finaliser so
//! that parallel and serial execution consume identical randomness, and so
//! that pairwise fading can be sampled on demand without materialising an
//! n x n matrix.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finaliser: a bijective avalanche mix on 64 bits.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent stream key from a seed, a purpose tag and an index.
#[inline]
pub fn derive(seed: u64, tag: u64, index: u64) -> u64 {
    mix64(mix64(mix64(seed ^ tag) ^ index))
}

/// A seeded block cipher RNG for bulk generation (placement, demands, urns).
pub fn chacha(seed: u64, tag: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(seed, tag, index))
}

/// Counter stream rooted at a derived key; yields iid uniform draws.
#[derive(Debug, Clone, Copy)]
pub struct CounterStream {
    key: u64,
    counter: u64,
}

impl CounterStream {
    #[inline]
    pub fn new(key: u64) -> Self {
        CounterStream { key, counter: 0 }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let v = mix64(self.key ^ self.counter.wrapping_mul(0xA076_1D64_78BD_642F));
        self.counter += 1;
        v
    }

    /// Uniform draw in the open interval (0, 1); never returns 0 or 1, so it
    /// is safe under `ln`.
    #[inline]
    pub fn next_open01(&mut self) -> f64 {
        (((self.next_u64() >> 11) as f64) + 0.5) * (1.0 / 9_007_199_254_740_992.0)
    }
}

// Purpose tags for derived streams.
pub(crate) const TAG_POSITIONS: u64 = 0x706f_7369_7469_6f6e; // "position"
pub(crate) const TAG_DEMANDS: u64 = 0x6465_6d61_6e64_7321; // "demands!"
pub(crate) const TAG_FADING: u64 = 0x6661_6469_6e67_2121; // "fading!!"
pub(crate) const TAG_TRIAL: u64 = 0x7472_6961_6c73_6564; // "trialsed"

/// The per-trial seed a campaign hands to trial `index`.
pub fn trial_seed(campaign_seed: u64, index: u64) -> u64 {
    derive(campaign_seed, TAG_TRIAL, index)
}
