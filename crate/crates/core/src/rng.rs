use num_bigint::BigInt;
use num_traits::Zero;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::rational::Rational;

/// Caller-owned deterministic randomness.
///
/// Equal seeds produce equal draw sequences on every platform. Single bits
/// are served from a buffered 64-bit word, least significant bit first.
#[derive(Debug, Clone)]
pub struct SeedState {
    rng: ChaCha8Rng,
    buffer: u64,
    buffered: u32,
}

impl SeedState {
    pub fn from_seed(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            buffer: 0,
            buffered: 0,
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    pub fn next_bit(&mut self) -> bool {
        if self.buffered == 0 {
            self.buffer = self.rng.next_u64();
            self.buffered = 64;
        }
        let bit = self.buffer & 1 == 1;
        self.buffer >>= 1;
        self.buffered -= 1;
        bit
    }

    /// Uniform index below `bound` (rejection sampling, no modulo bias).
    pub fn next_below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "empty range");
        let zone = u64::MAX - (u64::MAX % bound);
        loop {
            let v = self.next_u64();
            if v < zone {
                return v % bound;
            }
        }
    }

    /// Draws an index with probability proportional to `weights`, which must
    /// be nonnegative and sum to one. A 64-bit uniform `u` selects the first
    /// index whose cumulative weight exceeds `u / 2^64`; zero-weight indices
    /// are never returned.
    pub fn sample_weighted(&mut self, weights: &[Rational]) -> usize {
        let u = BigInt::from(self.next_u64());
        let scale = BigInt::from(1u8) << 64u32;
        let mut cumulative = Rational::zero();
        let mut last_positive = 0;
        for (i, w) in weights.iter().enumerate() {
            if w.is_zero() {
                continue;
            }
            last_positive = i;
            cumulative += w;
            if &u * cumulative.denom() < cumulative.numer() * &scale {
                return i;
            }
        }
        last_positive
    }
}
