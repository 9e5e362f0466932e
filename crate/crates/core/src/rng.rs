//! Seeded random source used for splits and initialization.
//!
//! The generator is ChaCha8 (from `rand_chacha`) keyed with
//! `SeedableRng::seed_from_u64`. All derived draws below are spelled out in
//! terms of raw `next_u64` words so that another implementation using the
//! same stream reproduces splits and initial factors exactly:
//!
//! * `unit_open`: `((x >> 11) + 0.5) * 2^-53`, a double in the open interval (0, 1).
//! * `below(n)`: `(x * n) >> 64` computed in 128 bits (multiply-shift, no rejection).
//! * `exp1`: `-ln(unit_open)`.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Version tag of the draw scheme, recorded in run manifests.
pub const RNG_SCHEME: &str = "chacha8-seed_from_u64/v1";

pub struct SeededRng(ChaCha8Rng);

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        SeededRng(ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    pub fn unit_open(&mut self) -> f64 {
        const SCALE: f64 = 1.0 / (1u64 << 53) as f64;
        ((self.next_u64() >> 11) as f64 + 0.5) * SCALE
    }

    pub fn below(&mut self, n: usize) -> usize {
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }

    pub fn exp1(&mut self) -> f64 {
        -self.unit_open().ln()
    }

    /// In-place Fisher-Yates shuffle, walking from the back.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }

    pub fn inner(&mut self) -> &mut ChaCha8Rng {
        &mut self.0
    }
}
