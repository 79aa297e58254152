//! Seeded randomness shared by every simulator in the crate.
//!
//! All draws go through [`SimRng`], a thin wrapper over ChaCha8 whose output
//! stream is specified bit-for-bit and therefore identical on every platform.
//! There is no ambient or thread-local randomness anywhere in the crate.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Deterministic 64-bit-seeded generator.
#[derive(Clone, Debug)]
pub struct SimRng {
    inner: ChaCha8Rng,
}

impl SimRng {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Seed for an independent stream: `base_seed XOR index`.
    ///
    /// Used for per-trial, per-item and per-session streams so that parallel
    /// work never shares a generator.
    pub fn derive_seed(base_seed: u64, index: u64) -> u64 {
        base_seed ^ index
    }

    pub fn derived(base_seed: u64, index: u64) -> Self {
        Self::new(Self::derive_seed(base_seed, index))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.random()
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    /// `true` with probability `p`. `p <= 0` never fires, `p >= 1` always does.
    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    /// Index drawn from unnormalised non-negative `weights`.
    ///
    /// Returns `None` when the weights sum to zero.
    pub fn weighted_index(&mut self, weights: &[f64]) -> Option<usize> {
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return None;
        }
        let mut u = self.uniform() * total;
        let mut last_positive = None;
        for (i, &w) in weights.iter().enumerate() {
            if w <= 0.0 {
                continue;
            }
            last_positive = Some(i);
            if u < w {
                return Some(i);
            }
            u -= w;
        }
        // rounding can leave a sliver past the final bucket
        last_positive
    }
}
