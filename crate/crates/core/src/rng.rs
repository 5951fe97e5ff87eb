//! Portable pseudo-random numbers.
//!
//! Everything random in this crate flows through [`SplitMix64`], a 64-bit
//! generator defined entirely by the few lines below (Steele, Lea & Flood,
//! 2014). The same seed yields the same stream in any language that
//! implements wrapping 64-bit arithmetic, so runs can be reproduced outside
//! Rust.

use std::f64::consts::PI;

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        mix64(self.state)
    }

    /// Uniform on `[0, 1)` with 53 bits of resolution.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on `[-pi, pi)`.
    pub fn next_phase(&mut self) -> f64 {
        // 2u - 1 is exact, and pi * (1 - 2^-52) rounds strictly below pi.
        PI * (2.0 * self.next_f64() - 1.0)
    }

    /// Uniform integer in `0..bound` via the multiply-high reduction.
    pub fn next_below(&mut self, bound: usize) -> usize {
        assert!(bound > 0, "bound must be positive");
        ((self.next_u64() as u128 * bound as u128) >> 64) as usize
    }
}

/// The SplitMix64 output finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed from a parent seed and a list of indices.
///
/// Used for per-row/per-image seeding so that results never depend on which
/// worker evaluated a work item.
pub fn derive_seed(parent: u64, indices: &[u64]) -> u64 {
    indices.iter().fold(mix64(parent ^ GOLDEN_GAMMA), |acc, &i| {
        mix64(acc.wrapping_add(GOLDEN_GAMMA).wrapping_add(mix64(i)))
    })
}
