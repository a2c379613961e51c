//! Deterministic uniform streams.
//!
//! A [`RandomSource`] is a 64-bit seed. Its stream is ChaCha8 keyed through
//! `SeedableRng::seed_from_u64` (PCG32 seed expansion), and uniforms on
//! `[0, 1)` are produced by the top 53 bits of each `u64` output scaled by
//! `2^-53`. Children are derived with SplitMix64 so that trial `t` of a run
//! always sees the same stream no matter which worker executes it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RandomSource {
    seed: u64,
}

impl RandomSource {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Sub-source for the `index`-th independent unit of work.
    pub fn child(&self, index: u64) -> RandomSource {
        let mixed = splitmix64(self.seed ^ splitmix64(index.wrapping_mul(GOLDEN_GAMMA) ^ 0xA5A5_A5A5));
        RandomSource { seed: mixed }
    }

    pub fn stream(&self) -> UniformStream {
        UniformStream { rng: ChaCha8Rng::seed_from_u64(self.seed) }
    }
}

/// Uniform variates on `[0, 1)`.
#[derive(Debug, Clone)]
pub struct UniformStream {
    rng: ChaCha8Rng,
}

impl UniformStream {
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    pub fn fill(&mut self, out: &mut [f64]) {
        for x in out.iter_mut() {
            *x = self.next_f64();
        }
    }

    /// Uniform on `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }
}
