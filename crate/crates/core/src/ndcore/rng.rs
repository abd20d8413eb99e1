use rand::seq::SliceRandom;
use rand::{Rng as _, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{Scalar, Tensor};
use crate::error::{Error, Result};

/// Seeded random stream backed by ChaCha8.
///
/// ChaCha is a counter-based generator with a portable, documented output
/// sequence, so a given seed reproduces the same values on every platform.
/// Independent sub-streams are derived with [`Rng::stream`].
#[derive(Clone, Debug)]
pub struct Rng {
    seed: u64,
    inner: ChaCha8Rng,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng { seed, inner: ChaCha8Rng::seed_from_u64(seed) }
    }

    /// A generator for the same seed on a separate ChaCha stream.
    pub fn stream(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Rng { seed, inner }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// One draw from `[lo, hi)`.
    pub fn uniform_f64(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.inner.random::<f64>()
    }

    /// Uniform integer in `lo..=hi`.
    pub fn int_inclusive(&mut self, lo: usize, hi: usize) -> usize {
        self.inner.random_range(lo..=hi)
    }

    pub fn bool(&mut self) -> bool {
        self.inner.random::<bool>()
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    /// Tensor of i.i.d. draws from `[lo, hi)`.
    pub fn uniform<T: Scalar>(&mut self, lo: f64, hi: f64, shape: &[usize]) -> Result<Tensor<T>> {
        if !(lo < hi) {
            return Err(Error::Range(format!("uniform bounds need lo < hi, got [{lo}, {hi})")));
        }
        let n: usize = shape.iter().product();
        let data = (0..n).map(|_| T::from_f64(self.uniform_f64(lo, hi))).collect();
        Tensor::new(shape, data)
    }

    /// Tensor of i.i.d. normal draws with mean 0 and standard deviation `std`.
    pub fn normal<T: Scalar>(&mut self, std: f64, shape: &[usize]) -> Tensor<T> {
        let n: usize = shape.iter().product();
        let data = (0..n).map(|_| T::from_f64(std * self.standard_normal())).collect();
        Tensor::new(shape, data).expect("length matches shape")
    }

    pub fn shuffle<X>(&mut self, items: &mut [X]) {
        items.shuffle(&mut self.inner);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_tensor() {
        let a: Tensor<f32> = Rng::new(0).uniform(-1.0, 1.0, &[4, 5]).unwrap();
        let b: Tensor<f32> = Rng::new(0).uniform(-1.0, 1.0, &[4, 5]).unwrap();
        assert_eq!(a.data(), b.data());
        let c: Tensor<f32> = Rng::new(1).uniform(-1.0, 1.0, &[4, 5]).unwrap();
        assert_ne!(a.data(), c.data());
    }

    #[test]
    fn uniform_mean_converges() {
        let t: Tensor<f64> = Rng::new(7).uniform(0.0, 1.0, &[1_000_000]).unwrap();
        let mean = t.data().iter().sum::<f64>() / t.len() as f64;
        assert!((mean - 0.5).abs() < 0.01, "mean {mean}");
        assert!(t.data().iter().all(|&x| (0.0..1.0).contains(&x)));
    }

    #[test]
    fn degenerate_range_is_error() {
        assert!(matches!(Rng::new(0).uniform::<f32>(1.0, 1.0, &[2]), Err(Error::Range(_))));
        assert!(Rng::new(0).uniform::<f32>(2.0, 1.0, &[2]).is_err());
    }

    #[test]
    fn streams_are_independent() {
        let mut a = Rng::stream(3, 0);
        let mut b = Rng::stream(3, 1);
        assert_ne!(a.next_u64(), b.next_u64());
    }
}
