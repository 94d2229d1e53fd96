//! Seeded point sampling over coordinate boxes.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::scalar::Real;

/// Deterministic sampler; the same seed always yields the same stream.
#[derive(Clone, Debug)]
pub struct Sampler {
    rng: ChaCha8Rng,
}

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn uniform<T: Real>(&mut self, lo: f64, hi: f64) -> T {
        T::lit(self.rng.random_range(lo..hi))
    }

    /// Point uniformly distributed in `[-half_width, half_width]^dim`.
    pub fn point<T: Real>(&mut self, dim: usize, half_width: f64) -> DVector<T> {
        DVector::from_fn(dim, |_, _| self.uniform(-half_width, half_width))
    }

    pub fn points<T: Real>(&mut self, dim: usize, count: usize, half_width: f64) -> Vec<DVector<T>> {
        (0..count).map(|_| self.point(dim, half_width)).collect()
    }
}

/// Convenience wrapper for one-shot sampling.
pub fn sample_box<T: Real>(dim: usize, count: usize, half_width: f64, seed: u64) -> Vec<DVector<T>> {
    Sampler::new(seed).points(dim, count, half_width)
}
