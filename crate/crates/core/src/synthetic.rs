//! Seeded generators for labeled Gaussian toy data.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::dataset::LabeledDataset;
use crate::error::{invalid, Result};

/// Isotropic Gaussian blobs: class `j` has `counts[j]` samples drawn from
/// `N(c_j, noise² I)` with centers `c_j ~ N(0, separation² I)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianClasses {
    pub d: usize,
    pub counts: Vec<usize>,
    pub separation: f64,
    pub noise: f64,
}

impl GaussianClasses {
    pub fn balanced(d: usize, classes: usize, per_class: usize, separation: f64) -> Self {
        Self {
            d,
            counts: vec![per_class; classes],
            separation,
            noise: 1.0,
        }
    }

    pub fn generate(&self, seed: u64) -> Result<LabeledDataset> {
        self.generate_with(&mut ChaCha8Rng::seed_from_u64(seed))
    }

    /// Samples are ordered class by class.
    pub fn generate_with<R: Rng>(&self, rng: &mut R) -> Result<LabeledDataset> {
        if self.d == 0 || self.counts.is_empty() || self.counts.contains(&0) {
            return invalid("need d ≥ 1 and at least one sample in every class");
        }
        let centers = DMatrix::from_fn(self.d, self.counts.len(), |_, _| {
            self.separation * rng.sample::<f64, _>(StandardNormal)
        });
        let labels: Vec<usize> = self
            .counts
            .iter()
            .enumerate()
            .flat_map(|(j, &c)| std::iter::repeat_n(j, c))
            .collect();
        let x = DMatrix::from_fn(self.d, labels.len(), |r, i| {
            centers[(r, labels[i])] + self.noise * rng.sample::<f64, _>(StandardNormal)
        });
        LabeledDataset::new(x, labels)
    }
}

/// Random dataset with `m` non-empty classes among `n ≥ m` samples, labels in
/// shuffled order, and per-class centers of random scale. Intended for
/// property tests.
pub fn random_dataset<R: Rng>(rng: &mut R, d: usize, n: usize, m: usize) -> Result<LabeledDataset> {
    if m == 0 || n < m || d == 0 {
        return invalid(format!("cannot draw {m} classes from {n} samples in {d} dimensions"));
    }
    let mut labels: Vec<usize> = (0..m).chain((m..n).map(|_| rng.random_range(0..m))).collect();
    labels.shuffle(rng);
    let spread = rng.random_range(0.0..4.0);
    let centers = DMatrix::from_fn(d, m, |_, _| spread * rng.sample::<f64, _>(StandardNormal));
    let offset: f64 = rng.random_range(-10.0..10.0);
    let x = DMatrix::from_fn(d, n, |r, i| {
        offset + centers[(r, labels[i])] + rng.sample::<f64, _>(StandardNormal)
    });
    LabeledDataset::new(x, labels)
}

/// Two balanced classes in `d` dimensions where only the first `informative`
/// features carry a class shift of `±shift/2`; the rest are unit noise.
pub fn sparse_two_class(
    seed: u64,
    d: usize,
    per_class: usize,
    informative: usize,
    shift: f64,
) -> Result<LabeledDataset> {
    if informative > d {
        return invalid(format!("{informative} informative features exceed d = {d}"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels: Vec<usize> = (0..2 * per_class).map(|i| i % 2).collect();
    let x = DMatrix::from_fn(d, labels.len(), |r, i| {
        let sign = if labels[i] == 0 { -0.5 } else { 0.5 };
        let mean = if r < informative { sign * shift } else { 0.0 };
        mean + rng.sample::<f64, _>(StandardNormal)
    });
    LabeledDataset::new(x, labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes_and_determinism() {
        let spec = GaussianClasses {
            d: 4,
            counts: vec![3, 5, 2],
            separation: 2.0,
            noise: 0.5,
        };
        let a = spec.generate(9).unwrap();
        assert_eq!(a.class_counts(), vec![3, 5, 2]);
        assert_eq!(a.n_features(), 4);
        assert_eq!(a.data(), spec.generate(9).unwrap().data());
        assert_ne!(a.data(), spec.generate(10).unwrap().data());
    }

    #[test]
    fn random_dataset_populates_every_class() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let ds = random_dataset(&mut rng, 3, 8, 8).unwrap();
            assert!(ds.class_counts().iter().all(|&c| c == 1));
        }
        assert!(random_dataset(&mut rng, 3, 4, 5).is_err());
    }

    #[test]
    fn sparse_support() {
        let ds = sparse_two_class(0, 10, 500, 2, 4.0).unwrap();
        let diff = |r: usize| {
            let mut s = [0.0; 2];
            for i in 0..ds.n_samples() {
                s[ds.labels()[i]] += ds.data()[(r, i)] / 500.0;
            }
            s[1] - s[0]
        };
        assert!((diff(0) - 4.0).abs() < 0.3);
        assert!(diff(5).abs() < 0.3);
    }
}
