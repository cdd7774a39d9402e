//! Seeded, stream-addressable random numbers.
//!
//! A stream is a ChaCha8 keystream: the 256-bit key is derived from the
//! 64-bit `seed` by `rand_core`'s `seed_from_u64` (a PCG32 expansion), and
//! the 64-bit ChaCha stream (nonce) word is set to `stream_id`. ChaCha is
//! counter based, so every `(seed, stream_id)` pair names a fixed byte
//! sequence on every platform. Floats are drawn as 53-bit uniforms from
//! successive `u64` words; normals use `rand_distr`'s ziggurat sampler.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream_id);
        Self { seed, stream_id, inner }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    /// Uniform on `[lo, hi)`.
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Uniform index below `n` (`n > 0`).
    pub fn index(&mut self, n: usize) -> usize {
        self.inner.random_range(0..n)
    }

    /// Index drawn with the given probabilities (assumed to sum to one).
    pub fn categorical(&mut self, weights: &[f64]) -> usize {
        let u = self.uniform();
        let mut acc = 0.0;
        for (i, w) in weights.iter().enumerate() {
            acc += w;
            if u < acc {
                return i;
            }
        }
        // rounding slack at the top end goes to the last atom with positive mass
        weights.iter().rposition(|w| *w > 0.0).unwrap_or(weights.len() - 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_and_stream_repeat() {
        let mut a = RngStream::new(42, 7);
        let mut b = RngStream::new(42, 7);
        let xs: Vec<u64> = (0..32).map(|_| a.next_u64()).collect();
        let ys: Vec<u64> = (0..32).map(|_| b.next_u64()).collect();
        assert_eq!(xs, ys);
    }

    #[test]
    fn streams_and_seeds_differ() {
        let first = |seed, stream| RngStream::new(seed, stream).next_u64();
        assert_ne!(first(42, 0), first(42, 1));
        assert_ne!(first(42, 0), first(43, 0));
    }

    #[test]
    fn known_answer_is_stable() {
        // pins the documented state transition; changing it breaks stored reports
        let mut r = RngStream::new(0, 0);
        let words: Vec<u64> = (0..2).map(|_| r.next_u64()).collect();
        assert_eq!(words, [13080132717333068652, 8594738769458413623]);
        let mut s = RngStream::new(1, 3);
        let more: Vec<u64> = (0..2).map(|_| s.next_u64()).collect();
        assert_eq!(more, [10481881765394875549, 12435132161185724354]);
    }

    #[test]
    fn distinct_streams_are_uncorrelated() {
        let n = 10_000;
        let mut a = RngStream::new(9, 0);
        let mut b = RngStream::new(9, 1);
        let xs: Vec<f64> = (0..n).map(|_| a.uniform()).collect();
        let ys: Vec<f64> = (0..n).map(|_| b.uniform()).collect();
        let mx = xs.iter().sum::<f64>() / n as f64;
        let my = ys.iter().sum::<f64>() / n as f64;
        let cov: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let vx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        let vy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
        let r = cov / (vx * vy).sqrt();
        assert!(r.abs() < 0.05, "r = {r}");
    }

    #[test]
    fn categorical_respects_zero_weights() {
        let mut r = RngStream::new(1, 1);
        for _ in 0..1000 {
            assert_eq!(r.categorical(&[0.0, 1.0, 0.0]), 1);
        }
    }
}
