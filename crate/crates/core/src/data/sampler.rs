//! Batch index sources: class-balanced sampling with replacement, epoch-wise
//! shuffling, and per-epoch subsampling of the unlabeled pool.

use rand::distributions::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::seeds::{rng_for, stream};

/// Draws sample indices with replacement, each weighted by the inverse
/// frequency of its class so every class is equally likely in expectation.
#[derive(Debug, Clone)]
pub struct WeightedSampler {
    dist: WeightedIndex<f64>,
    labels: Vec<usize>,
    n_classes: usize,
    rng: ChaCha8Rng,
}

impl WeightedSampler {
    pub fn new(labels: &[usize], n_classes: usize, seed: u64) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::Sampler("no labeled samples".into()));
        }
        let mut counts = vec![0usize; n_classes];
        for &l in labels {
            *counts
                .get_mut(l)
                .ok_or_else(|| Error::Sampler(format!("label {l} out of range")))? += 1;
        }
        if let Some(c) = counts.iter().position(|&n| n == 0) {
            return Err(Error::Sampler(format!("class {c} has no labeled samples")));
        }
        let weights: Vec<f64> = labels.iter().map(|&l| 1.0 / counts[l] as f64).collect();
        let dist = WeightedIndex::new(&weights).map_err(|e| Error::Sampler(e.to_string()))?;
        Ok(WeightedSampler {
            dist,
            labels: labels.to_vec(),
            n_classes,
            rng: rng_for(seed, stream::LABELED_SAMPLER, 0),
        })
    }

    /// Probability that a single draw returns a sample of each class.
    pub fn class_probabilities(&self) -> Vec<f64> {
        vec![1.0 / self.n_classes as f64; self.n_classes]
    }

    pub fn sample(&mut self, n: usize) -> Vec<usize> {
        (0..n).map(|_| self.dist.sample(&mut self.rng)).collect()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }
}

/// Endless stream of indices `0..n`, reshuffled each time it wraps.
#[derive(Debug, Clone)]
pub struct ShuffleCycler {
    order: Vec<usize>,
    pos: usize,
    rng: ChaCha8Rng,
}

impl ShuffleCycler {
    pub fn new(n: usize, rng: ChaCha8Rng) -> Result<Self> {
        if n == 0 {
            return Err(Error::Sampler("cannot cycle over an empty set".into()));
        }
        let mut c = ShuffleCycler {
            order: (0..n).collect(),
            pos: 0,
            rng,
        };
        c.order.shuffle(&mut c.rng);
        Ok(c)
    }

    pub fn next_batch(&mut self, size: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(size);
        while out.len() < size {
            if self.pos == self.order.len() {
                self.order.shuffle(&mut self.rng);
                self.pos = 0;
            }
            out.push(self.order[self.pos]);
            self.pos += 1;
        }
        out
    }
}

/// Sorted indices of a fresh random subset of `ceil(pool_len / denominator)`
/// unlabeled samples for the given epoch.
pub fn subsample_unlabeled(pool_len: usize, denominator: usize, seed: u64, epoch: usize) -> Vec<usize> {
    if pool_len == 0 {
        return Vec::new();
    }
    let k = pool_len.div_ceil(denominator.max(1));
    let mut rng = rng_for(seed, stream::UNLABELED_SUBSET, epoch as u64);
    let mut idx = rand::seq::index::sample(&mut rng, pool_len, k).into_vec();
    idx.sort_unstable();
    idx
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn balanced_draws_pass_chi_square() {
        // 1:9 imbalance, 10 000 draws; χ² critical value at 99.9 % with one dof
        let labels: Vec<usize> = (0..100).map(|i| usize::from(i < 10)).collect();
        let mut s = WeightedSampler::new(&labels, 2, 5).unwrap();
        let draws = s.sample(10_000);
        let pos = draws.iter().filter(|&&i| labels[i] == 1).count() as f64;
        let expected = 5000.0;
        let chi2 = 2.0 * (pos - expected).powi(2) / expected;
        assert!(chi2 < 10.828, "chi2 = {chi2}");
        assert_eq!(s.class_probabilities(), vec![0.5, 0.5]);
    }

    #[test]
    fn missing_class_is_an_error() {
        assert!(WeightedSampler::new(&[0, 0, 0], 2, 0).is_err());
        assert!(WeightedSampler::new(&[], 2, 0).is_err());
        assert!(WeightedSampler::new(&[0, 3], 2, 0).is_err());
    }

    #[test]
    fn sampler_is_seeded() {
        let labels = [0, 1, 1, 0, 1];
        let a = WeightedSampler::new(&labels, 2, 7).unwrap().sample(50);
        let b = WeightedSampler::new(&labels, 2, 7).unwrap().sample(50);
        assert_eq!(a, b);
    }

    #[test]
    fn cycler_visits_everything_once_per_pass() {
        let mut c = ShuffleCycler::new(7, rng_for(1, 0, 0)).unwrap();
        let mut first = c.next_batch(7);
        first.sort_unstable();
        assert_eq!(first, (0..7).collect::<Vec<_>>());
        assert_eq!(c.next_batch(10).len(), 10);
        assert!(ShuffleCycler::new(0, rng_for(1, 0, 0)).is_err());
    }

    #[test]
    fn subsample_sizes() {
        assert_eq!(subsample_unlabeled(1047, 10, 0, 0).len(), 105);
        assert_eq!(subsample_unlabeled(10, 10, 0, 0).len(), 1);
        assert!(subsample_unlabeled(0, 10, 0, 0).is_empty());
        assert_ne!(subsample_unlabeled(1000, 10, 0, 1), subsample_unlabeled(1000, 10, 0, 2));
    }

    proptest! {
        #[test]
        fn subsample_is_sorted_unique_in_range(n in 1usize..500, d in 1usize..20, seed: u64, epoch in 0usize..100) {
            let idx = subsample_unlabeled(n, d, seed, epoch);
            prop_assert_eq!(idx.len(), n.div_ceil(d));
            prop_assert!(idx.windows(2).all(|w| w[0] < w[1]));
            prop_assert!(idx.iter().all(|&i| i < n));
        }
    }
}
