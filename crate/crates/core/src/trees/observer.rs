use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

/// Welford running mean and variance.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Gaussian {
    pub count: f64,
    pub mean: f64,
    pub m2: f64,
}

impl Gaussian {
    pub fn update(&mut self, x: f64) {
        self.count += 1.0;
        let d = x - self.mean;
        self.mean += d / self.count;
        self.m2 += d * (x - self.mean);
    }

    /// Sample variance; zero below two observations.
    pub fn variance(&self) -> f64 {
        if self.count < 2.0 {
            0.0
        } else {
            (self.m2 / (self.count - 1.0)).max(0.0)
        }
    }

    /// Estimated number of observations `<= x` under a normal fit.
    pub fn mass_below(&self, x: f64) -> f64 {
        if self.count == 0.0 {
            return 0.0;
        }
        let sd = self.variance().sqrt();
        if sd == 0.0 {
            return if self.mean <= x { self.count } else { 0.0 };
        }
        let z = (x - self.mean) / sd;
        self.count * 0.5 * erfc(-z / std::f64::consts::SQRT_2)
    }
}

/// Per-class Gaussian summaries of one numeric feature at a leaf.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianObserver {
    per_class: Vec<Gaussian>,
    min: f64,
    max: f64,
}

impl GaussianObserver {
    pub fn new(n_classes: usize) -> Self {
        GaussianObserver {
            per_class: vec![Gaussian::default(); n_classes],
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
        }
    }

    pub fn update(&mut self, x: f64, class: usize) {
        self.per_class[class].update(x);
        self.min = self.min.min(x);
        self.max = self.max.max(x);
    }

    pub fn class(&self, class: usize) -> &Gaussian {
        &self.per_class[class]
    }

    pub fn range(&self) -> Option<(f64, f64)> {
        (self.max > self.min).then_some((self.min, self.max))
    }

    /// `n` thresholds evenly spaced strictly inside the observed range.
    pub fn candidate_thresholds(&self, n: usize) -> Vec<f64> {
        match self.range() {
            Some((lo, hi)) => (1..=n)
                .map(|i| lo + (hi - lo) * i as f64 / (n + 1) as f64)
                .collect(),
            None => Vec::new(),
        }
    }

    /// Estimated per-class counts on each side of `x <= threshold`.
    pub fn split_counts(&self, threshold: f64) -> (Vec<f64>, Vec<f64>) {
        let left: Vec<f64> = self
            .per_class
            .iter()
            .map(|g| g.mass_below(threshold).clamp(0.0, g.count))
            .collect();
        let right = self
            .per_class
            .iter()
            .zip(&left)
            .map(|(g, l)| g.count - l)
            .collect();
        (left, right)
    }
}
