//! Counter-based random streams.
//!
//! A stream is addressed by `(seed, stream)`; every draw within it by its
//! position. ChaCha is a counter-mode cipher, so any draw can be reproduced
//! from its address without replaying the ones before it.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    stream: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { seed, stream, rng }
    }

    /// Stream positioned so that the next [`uniform`](Self::uniform) returns
    /// draw number `draw` (0-based).
    pub fn at(seed: u64, stream: u64, draw: u64) -> Self {
        let mut s = Self::new(seed, stream);
        // Two 32-bit words per 64-bit draw.
        s.rng.set_word_pos(u128::from(draw) * 2);
        s
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Number of 64-bit draws consumed so far.
    pub fn draws(&self) -> u64 {
        (self.rng.get_word_pos() / 2) as u64
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform on `[0, 1)` with 53 bits of resolution.
    pub fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `0..n` by scaling a single draw.
    pub fn below(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        ((self.uniform() * n as f64) as usize).min(n - 1)
    }
}
