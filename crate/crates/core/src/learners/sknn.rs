use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::{check_dim, check_label, IncrementalClassifier};
use crate::error::{Error, Result};
use crate::types::{normalize, Prediction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SknnConfig {
    pub window: usize,
    pub k: usize,
}

impl Default for SknnConfig {
    fn default() -> Self {
        SknnConfig { window: 1000, k: 5 }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Stored {
    features: Vec<f64>,
    label: usize,
    seq: u64,
}

/// k-nearest-neighbour classifier over a FIFO window of the most recent
/// labeled instances. Unweighted Euclidean vote.
#[derive(Debug, Clone, PartialEq)]
pub struct Sknn {
    n_classes: usize,
    dim: usize,
    config: SknnConfig,
    window: VecDeque<Stored>,
    n_learned: u64,
}

impl Sknn {
    pub fn new(n_classes: usize, dim: usize, config: SknnConfig) -> Result<Self> {
        if config.k == 0 || config.window == 0 {
            return Err(Error::Config("sknn window and k must be >= 1".into()));
        }
        Ok(Sknn {
            n_classes,
            dim,
            config,
            window: VecDeque::with_capacity(config.window.min(4096)),
            n_learned: 0,
        })
    }

    pub fn window_len(&self) -> usize {
        self.window.len()
    }

    /// Labels in the window, oldest first.
    pub fn window_labels(&self) -> Vec<usize> {
        self.window.iter().map(|s| s.label).collect()
    }

    /// Features in the window, oldest first.
    pub fn window_features(&self) -> impl Iterator<Item = &[f64]> {
        self.window.iter().map(|s| s.features.as_slice())
    }
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

impl IncrementalClassifier for Sknn {
    fn name(&self) -> &'static str {
        "sknn"
    }

    fn n_classes(&self) -> usize {
        self.n_classes
    }

    fn predict(&self, x: &[f64]) -> Result<Prediction> {
        check_dim(self.dim, x)?;
        if self.window.is_empty() {
            return Ok(Prediction::uniform(self.n_classes));
        }
        let mut scored: Vec<(f64, u64, usize)> = self
            .window
            .iter()
            .map(|s| (squared_distance(&s.features, x), s.seq, s.label))
            .collect();
        let k = self.config.k.min(scored.len());
        let order = |a: &(f64, u64, usize), b: &(f64, u64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if k < scored.len() {
            scored.select_nth_unstable_by(k - 1, order);
        }
        let mut votes = vec![0.0; self.n_classes];
        for &(_, _, label) in &scored[..k] {
            votes[label] += 1.0;
        }
        normalize(&votes)
    }

    fn learn(&mut self, x: &[f64], y: usize) -> Result<()> {
        check_dim(self.dim, x)?;
        check_label(self.n_classes, y)?;
        self.window.push_back(Stored {
            features: x.to_vec(),
            label: y,
            seq: self.n_learned,
        });
        while self.window.len() > self.config.window {
            self.window.pop_front();
        }
        self.n_learned += 1;
        Ok(())
    }

    fn n_learned(&self) -> u64 {
        self.n_learned
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;
    use rand::seq::SliceRandom;
    use rand::Rng;

    fn knn(window: usize, k: usize) -> Sknn {
        Sknn::new(3, 2, SknnConfig { window, k }).unwrap()
    }

    #[test]
    fn empty_window_is_uniform() {
        let p = knn(10, 5).predict(&[0.0, 0.0]).unwrap();
        assert_eq!(p.probs(), &[1.0 / 3.0; 3]);
    }

    #[test]
    fn vote_fractions() {
        let mut m = knn(10, 5);
        m.learn(&[0.0, 0.0], 0).unwrap();
        m.learn(&[1.0, 0.0], 0).unwrap();
        m.learn(&[0.0, 1.0], 1).unwrap();
        let p = m.predict(&[0.5, 0.5]).unwrap();
        assert!((p.probs()[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((p.probs()[1] - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(p.probs()[2], 0.0);
    }

    #[test]
    fn exact_match_with_k1() {
        let mut m = knn(10, 1);
        m.learn(&[3.0, 4.0], 2).unwrap();
        m.learn(&[0.0, 0.0], 1).unwrap();
        assert_eq!(m.predict(&[3.0, 4.0]).unwrap().probs(), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn distance_ties_prefer_older_instances() {
        let mut m = knn(10, 1);
        m.learn(&[1.0, 0.0], 0).unwrap();
        m.learn(&[-1.0, 0.0], 1).unwrap();
        assert_eq!(m.predict(&[0.0, 0.0]).unwrap().probs(), &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn fifo_eviction() {
        let mut m = knn(2, 1);
        for (i, y) in [0, 1, 2].into_iter().enumerate() {
            m.learn(&[i as f64, 0.0], y).unwrap();
        }
        assert_eq!(m.window_len(), 2);
        assert_eq!(m.window_labels(), vec![1, 2]);
        assert_eq!(m.n_learned(), 3);

        let mut full = knn(4, 1);
        for i in 0..4 {
            full.learn(&[i as f64, 1.0], i % 3).unwrap();
        }
        assert_eq!(full.window_len(), 4);
    }

    #[test]
    fn rejects_bad_shapes_and_config() {
        let mut m = knn(3, 1);
        assert!(m.predict(&[1.0]).is_err());
        assert!(m.learn(&[1.0], 0).is_err());
        assert!(m.learn(&[1.0, 1.0], 5).is_err());
        assert!(Sknn::new(3, 2, SknnConfig { window: 5, k: 0 }).is_err());
    }

    #[test]
    fn prediction_ignores_arrival_order_without_ties() {
        let mut rng = SeededRng::new(3);
        for _ in 0..20 {
            let mut items: Vec<(Vec<f64>, usize)> = (0..30)
                .map(|_| (vec![rng.random::<f64>(), rng.random::<f64>()], rng.random_range(0..3)))
                .collect();
            let query = [rng.random::<f64>(), rng.random::<f64>()];
            let mut a = knn(100, 5);
            for (x, y) in &items {
                a.learn(x, *y).unwrap();
            }
            items.shuffle(&mut rng);
            let mut b = knn(100, 5);
            for (x, y) in &items {
                b.learn(x, *y).unwrap();
            }
            assert_eq!(a.predict(&query).unwrap(), b.predict(&query).unwrap());
        }
    }

    #[test]
    fn predict_is_pure() {
        let mut m = knn(10, 3);
        m.learn(&[1.0, 2.0], 1).unwrap();
        let before = m.clone();
        let p1 = m.predict(&[0.0, 0.0]).unwrap();
        let p2 = m.predict(&[0.0, 0.0]).unwrap();
        assert_eq!(p1, p2);
        assert_eq!(m, before);
    }
}
