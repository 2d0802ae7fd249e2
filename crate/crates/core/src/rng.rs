//! Seedable, splittable random streams.
//!
//! Every stochastic operation in this crate takes an explicit stream, so
//! concurrent runs stay reproducible. Child streams are derived from the
//! parent's seed and a label, never from the parent's draw position, which
//! makes the derivation independent of evaluation order.

use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// FNV-1a over a byte string. Used for label hashing only, never for
/// security; written out so the value is stable across toolchains.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A named random stream backed by ChaCha8.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn seeded(seed: u64) -> Self {
        RngStream { seed, inner: ChaCha8Rng::seed_from_u64(seed) }
    }

    /// Seed this stream was created from.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Derive an independent child stream. Depends only on the parent seed
    /// and the label, not on how many values the parent has produced.
    pub fn split(&self, label: &str) -> RngStream {
        RngStream::seeded(splitmix64(self.seed ^ fnv1a64(label.as_bytes())))
    }

    /// Indexed variant of `split` for per-item streams.
    pub fn split_indexed(&self, label: &str, index: u64) -> RngStream {
        RngStream::seeded(splitmix64(
            self.seed ^ fnv1a64(label.as_bytes()) ^ splitmix64(index),
        ))
    }

    /// Standard normal draw.
    pub fn normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.inner)
    }

    /// Uniform draw from [0, 1).
    pub fn uniform(&mut self) -> f64 {
        self.inner.random_range(0.0..1.0)
    }

    /// Uniform integer in [0, n).
    pub fn below(&mut self, n: usize) -> usize {
        self.inner.random_range(0..n)
    }

    /// `count` distinct indices from [0, n), via partial Fisher-Yates.
    /// Order of the result is the sampling order.
    pub fn sample_indices(&mut self, n: usize, count: usize) -> Vec<usize> {
        assert!(count <= n, "cannot sample {count} from {n}");
        let mut pool: Vec<usize> = (0..n).collect();
        for i in 0..count {
            let j = i + self.below(n - i);
            pool.swap(i, j);
        }
        pool.truncate(count);
        pool
    }

    /// Random permutation of [0, n).
    pub fn permutation(&mut self, n: usize) -> Vec<usize> {
        self.sample_indices(n, n)
    }
}
