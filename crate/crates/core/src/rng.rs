//! Counter-based, splittable random source for noise and initialisation.
//!
//! Every stream is a ChaCha8 keystream selected by `(seed, stream)`, and
//! Gaussian draws use the ziggurat method on top of it, so a given
//! `(seed, stream, call sequence)` always yields the same values.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{ensure, Result};
use crate::tensor::{Scalar, Vector};

/// SplitMix64 finaliser.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hashes a tuple of keys into a stream id.
pub fn stream_key(parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(0x6A09_E667_F3BC_C908, |acc, &p| mix64(acc ^ mix64(p)))
}

#[derive(Clone, Debug)]
pub struct NoiseRng {
    seed: u64,
    stream: u64,
    inner: ChaCha8Rng,
}

impl NoiseRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self {
            seed,
            stream,
            inner,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Number of 32-bit words consumed so far.
    pub fn position(&self) -> u128 {
        self.inner.get_word_pos()
    }

    /// A fresh generator on a sub-stream of this one, same seed.
    pub fn fork(&self, sub: u64) -> NoiseRng {
        NoiseRng::new(self.seed, stream_key(&[self.stream, sub]))
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    #[inline]
    pub fn uniform<T: Scalar>(&mut self) -> T {
        T::unit(self.inner.next_u64())
    }

    /// Uniform index in `0..n` (Lemire's multiply-shift, negligible bias at
    /// the sizes used here).
    pub fn below(&mut self, n: usize) -> usize {
        ((self.inner.next_u32() as u64 * n as u64) >> 32) as usize
    }

    /// Adds `N(0, sigma²)` draws to `out`, in order.
    #[inline]
    pub fn add_gaussian<T: Scalar>(&mut self, out: &mut [T], sigma: T) {
        for v in out {
            *v += sigma * T::standard_normal(&mut self.inner);
        }
    }

    pub fn fill_gaussian<T: Scalar>(&mut self, out: &mut [T], sigma: T) {
        out.iter_mut().for_each(|v| *v = T::zero());
        self.add_gaussian(out, sigma);
    }
}

/// `len` i.i.d. draws from `N(0, sigma²)`. `sigma = 0` returns exact zeros
/// without advancing the generator.
pub fn sample_gaussian<T: Scalar>(rng: &mut NoiseRng, len: usize, sigma: T) -> Result<Vector<T>> {
    ensure!(
        sigma >= T::zero() && sigma.is_finite(),
        "noise sigma must be finite and >= 0, got {sigma:?}"
    );
    let mut v = Vector::zeros(len);
    if sigma > T::zero() {
        rng.add_gaussian(v.as_mut_slice(), sigma);
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn moments(v: &[f64]) -> (f64, f64) {
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, var)
    }

    #[test]
    fn zero_sigma_is_exact_zero_and_consumes_nothing() {
        let mut rng = NoiseRng::new(7, 3);
        let before = rng.position();
        let v = sample_gaussian::<f32>(&mut rng, 4, 0.0).unwrap();
        assert_eq!(v.as_slice(), &[0.0; 4]);
        assert_eq!(rng.position(), before);
    }

    #[test]
    fn negative_sigma_rejected() {
        let mut rng = NoiseRng::new(7, 3);
        assert!(sample_gaussian::<f64>(&mut rng, 4, -0.1).is_err());
    }

    #[test]
    fn unit_variance_moments() {
        let mut rng = NoiseRng::new(20190312, 1);
        let v = sample_gaussian::<f64>(&mut rng, 1_000_000, 1.0).unwrap();
        let (mean, var) = moments(v.as_slice());
        assert!(mean.abs() <= 0.005, "mean {mean}");
        assert!((0.99..=1.01).contains(&var), "var {var}");
    }

    #[test]
    fn half_sigma_moments_f32() {
        let mut rng = NoiseRng::new(99, 2);
        let v = sample_gaussian::<f32>(&mut rng, 1_000_000, 0.5).unwrap();
        let v: Vec<f64> = v.iter().map(|&x| x as f64).collect();
        let (_, var) = moments(&v);
        assert!((0.2475..=0.2525).contains(&var), "var {var}");
    }

    #[test]
    fn same_state_same_bits() {
        let a = sample_gaussian::<f32>(&mut NoiseRng::new(5, 9), 1000, 1.0).unwrap();
        let b = sample_gaussian::<f32>(&mut NoiseRng::new(5, 9), 1000, 1.0).unwrap();
        assert!(a
            .iter()
            .zip(b.iter())
            .all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn pinned_sequence() {
        // Frozen from this implementation; guards platform/version drift.
        let v = sample_gaussian::<f64>(&mut NoiseRng::new(1, 0), 4, 1.0).unwrap();
        let bits: Vec<u64> = v.iter().map(|x| x.to_bits()).collect();
        assert_eq!(bits, PINNED.to_vec(), "{:?}", v);
    }
    const PINNED: [u64; 4] = [
        13821001314148523254,
        13832404614098182117,
        4599670930364412140,
        13831125360426008032,
    ];

    #[test]
    fn distinct_streams_uncorrelated() {
        let n = 100_000;
        let a = sample_gaussian::<f64>(&mut NoiseRng::new(42, 1), n, 1.0).unwrap();
        let b = sample_gaussian::<f64>(&mut NoiseRng::new(42, 2), n, 1.0).unwrap();
        let (ma, va) = moments(a.as_slice());
        let (mb, vb) = moments(b.as_slice());
        let cov = a
            .iter()
            .zip(b.iter())
            .map(|(x, y)| (x - ma) * (y - mb))
            .sum::<f64>()
            / (n as f64 - 1.0);
        let r = cov / (va * vb).sqrt();
        assert!(r.abs() < 0.01, "pearson r = {r}");
    }

    #[test]
    fn fork_is_deterministic_and_distinct() {
        let base = NoiseRng::new(3, 4);
        assert_eq!(base.fork(1).stream(), base.fork(1).stream());
        assert_ne!(base.fork(1).stream(), base.fork(2).stream());
        assert_eq!(base.fork(1).seed(), 3);
    }
}
