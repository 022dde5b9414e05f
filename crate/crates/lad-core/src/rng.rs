//! Labeled deterministic random streams.
//!
//! Every randomized stage of the pipeline draws from its own stream, derived
//! from a root seed and a purpose label. Streams are isolated: what one
//! stream consumes never shifts another, so adding a new randomized
//! component cannot perturb existing results.

use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use sha2::{Digest, Sha256};

/// A deterministic random stream bound to a `(root_seed, label)` pair.
///
/// The same pair always yields the identical value sequence, regardless of
/// how any other stream has been consumed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RngStream {
    root_seed: u64,
    label: String,
    rng: ChaCha20Rng,
}

/// Derives the stream for `(root_seed, label)`.
pub fn derive_stream(root_seed: u64, label: &str) -> RngStream {
    RngStream::derive(root_seed, label)
}

impl RngStream {
    pub fn derive(root_seed: u64, label: &str) -> Self {
        let mut h = Sha256::new();
        h.update(root_seed.to_le_bytes());
        h.update([0u8]);
        h.update(label.as_bytes());
        let digest = h.finalize();
        let mut seed = [0u8; 32];
        seed.copy_from_slice(&digest);
        Self { root_seed, label: String::from(label), rng: ChaCha20Rng::from_seed(seed) }
    }

    pub fn root_seed(&self) -> u64 {
        self.root_seed
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.random()
    }

    /// Uniform draw from `[0, 1)`.
    pub fn unit_f64(&mut self) -> f64 {
        self.rng.random()
    }

    /// Uniform integer from `[0, n)`. `n` must be nonzero.
    pub fn below(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }

    /// Uniform draw from the open interval `(lo, hi)`.
    pub fn open_range(&mut self, lo: f64, hi: f64) -> f64 {
        debug_assert!(lo < hi);
        loop {
            let v = lo + self.unit_f64() * (hi - lo);
            if v > lo && v < hi {
                return v;
            }
        }
    }

    /// Standard normal draw.
    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    /// In-place Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        items.shuffle(&mut self.rng);
    }

    /// `amount` distinct indices from `[0, length)`.
    pub fn sample_indices(&mut self, length: usize, amount: usize) -> Vec<usize> {
        rand::seq::index::sample(&mut self.rng, length, amount).into_vec()
    }

    /// Draw an index weighted by the given nonnegative weights.
    ///
    /// Returns `None` if the weights sum to zero or the slice is empty.
    pub fn weighted_index(&mut self, weights: &[f64]) -> Option<usize> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return None;
        }
        let mut target = self.unit_f64() * total;
        for (i, &w) in weights.iter().enumerate() {
            target -= w;
            if target < 0.0 {
                return Some(i);
            }
        }
        // Rounding pushed the target past the last positive weight.
        weights.iter().rposition(|&w| w > 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;

    fn draws(seed: u64, label: &str, n: usize) -> Vec<u64> {
        let mut s = derive_stream(seed, label);
        (0..n).map(|_| s.next_u64()).collect()
    }

    #[test]
    fn same_seed_and_label_repeat_exactly() {
        assert_eq!(draws(42, "phi", 100), draws(42, "phi", 100));
    }

    #[test]
    fn different_labels_do_not_collide() {
        let a = draws(42, "phi", 1000);
        let b = draws(42, "lambda", 1000);
        assert_ne!(a, b);
        let overlap = a.iter().zip(&b).filter(|(x, y)| x == y).count();
        assert_eq!(overlap, 0);
    }

    #[test]
    fn different_seeds_do_not_collide() {
        let a = draws(42, "phi", 1000);
        let b = draws(43, "phi", 1000);
        assert_ne!(a, b);
        let overlap = a.iter().zip(&b).filter(|(x, y)| x == y).count();
        assert_eq!(overlap, 0);
    }

    #[test]
    fn stream_isolation_is_independent_of_consumption_order() {
        let mut a = derive_stream(7, "a");
        let _ = a.next_u64();
        let _ = a.next_u64();
        // Deriving "b" after consuming "a" matches deriving "b" fresh.
        let mut b1 = derive_stream(7, "b");
        let mut b2 = derive_stream(7, "b");
        assert_eq!(b1.next_u64(), b2.next_u64());
    }

    #[test]
    fn weighted_index_respects_zero_weights() {
        let mut s = derive_stream(1, "w");
        for _ in 0..100 {
            let i = s.weighted_index(&[0.0, 1.0, 0.0]).unwrap();
            assert_eq!(i, 1);
        }
        assert_eq!(s.weighted_index(&[0.0, 0.0]), None);
        assert_eq!(s.weighted_index(&[]), None);
    }

    #[test]
    fn open_range_excludes_endpoints() {
        let mut s = derive_stream(3, "r");
        for _ in 0..1000 {
            let v = s.open_range(1.0, 2.0);
            assert!(v > 1.0 && v < 2.0);
        }
    }
}
