//! Reproducible uniform streams.
//!
//! A stream is identified by a 64-bit seed plus an optional stream id; the
//! underlying ChaCha8 generator is counter based, so the `i`-th draw of a
//! stream is a pure function of `(seed, stream, i)`.

#[allow(unused_imports)]
use num_traits::Float;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::special::inv_norm_cdf;

#[derive(Clone, Debug)]
pub struct UniformStream {
    rng: ChaCha8Rng,
}

impl UniformStream {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { rng }
    }

    /// Positions the stream so that the next draw is draw number `index`.
    pub fn seek(&mut self, index: u64) {
        // One uniform consumes two 32-bit words.
        self.rng.set_word_pos(2 * index as u128);
    }

    /// Uniform on the open interval (0, 1).
    pub fn next_uniform(&mut self) -> f64 {
        let bits = self.rng.next_u64() >> 11;
        (bits as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Unit-rate exponential variate.
    pub fn next_exp(&mut self) -> f64 {
        -self.next_uniform().ln()
    }

    /// Standard normal variate by inversion.
    pub fn next_normal(&mut self) -> f64 {
        inv_norm_cdf(self.next_uniform())
    }
}

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives an independent seed from a master seed and a path of counters
/// (for instance `[cell_id, replication]`).
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter().fold(mix64(master ^ 0x9e37_79b9_7f4a_7c15), |acc, &p| {
        mix64(acc.wrapping_add(0x9e37_79b9_7f4a_7c15).wrapping_add(mix64(p)))
    })
}
