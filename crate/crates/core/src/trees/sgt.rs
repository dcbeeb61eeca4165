//! Stochastic gradient tree: one binary-logistic tree per class, combined
//! by softmax over the per-class leaf logits.
//!
//! Each leaf accumulates first and second order statistics of the logistic
//! loss. Every `grace_period` instances it either splits, when a one-sided
//! t-test on per-instance loss deltas finds the best candidate split better
//! than a plain leaf update (Bonferroni-corrected over all candidates), or it
//! applies a Newton step to its value.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::Result;
use crate::learners::{check_dim, check_label, IncrementalClassifier};
use crate::types::Prediction;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SgtConfig {
    pub lambda: f64,
    pub alpha: f64,
    pub grace_period: u64,
    pub n_thresholds: usize,
    /// Instances the tree must see before the root fixes its candidate grid.
    pub warmup: u64,
    /// Smallest child a candidate split may produce.
    pub min_child: u64,
}

impl Default for SgtConfig {
    fn default() -> Self {
        SgtConfig {
            lambda: 0.1,
            alpha: 0.05,
            grace_period: 200,
            n_thresholds: 10,
            warmup: 20,
            min_child: 30,
        }
    }
}

/// Gradient and hessian moments over a set of instances.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct GradStats {
    pub n: f64,
    pub g: f64,
    pub h: f64,
    pub gg: f64,
    pub hh: f64,
    pub gh: f64,
}

impl GradStats {
    fn add(&mut self, g: f64, h: f64) {
        self.n += 1.0;
        self.g += g;
        self.h += h;
        self.gg += g * g;
        self.hh += h * h;
        self.gh += g * h;
    }

    fn merge(&self, other: &GradStats) -> GradStats {
        GradStats {
            n: self.n + other.n,
            g: self.g + other.g,
            h: self.h + other.h,
            gg: self.gg + other.gg,
            hh: self.hh + other.hh,
            gh: self.gh + other.gh,
        }
    }

    /// Newton step `-G / (H + lambda)`.
    pub fn delta(&self, lambda: f64) -> f64 {
        -self.g / (self.h + lambda)
    }

    fn score(&self, lambda: f64) -> f64 {
        self.g * self.g / (self.h + lambda)
    }
}

/// Gradient and hessian of the logistic loss at logit `value` for target `t`.
pub fn logistic_grad_hess(value: f64, target: f64) -> (f64, f64) {
    let p = 1.0 / (1.0 + (-value).exp());
    (p - target, p * (1.0 - p))
}

#[derive(Debug, Clone, PartialEq)]
struct FeatureGrid {
    thresholds: Vec<f64>,
    /// `thresholds.len() + 1` bins; bin `i` holds `thresholds[i-1] < x <= thresholds[i]`.
    bins: Vec<GradStats>,
}

impl FeatureGrid {
    fn new(lo: f64, hi: f64, n: usize) -> Self {
        let thresholds: Vec<f64> = if hi > lo {
            (1..=n).map(|i| lo + (hi - lo) * i as f64 / (n + 1) as f64).collect()
        } else {
            Vec::new()
        };
        let bins = vec![GradStats::default(); thresholds.len() + 1];
        FeatureGrid { thresholds, bins }
    }

    fn bin_of(&self, x: f64) -> usize {
        self.thresholds.partition_point(|&t| t < x)
    }
}

#[derive(Debug, Clone, PartialEq)]
struct SgtLeaf {
    value: f64,
    total: GradStats,
    since_update: u64,
    /// Per-feature `(lower, upper)` bounds implied by ancestor splits.
    bounds: Vec<(f64, f64)>,
    grids: Option<Vec<FeatureGrid>>,
}

#[derive(Debug, Clone, PartialEq)]
enum SgtNode {
    Leaf(SgtLeaf),
    Split {
        feature: usize,
        threshold: f64,
        left: Box<SgtNode>,
        right: Box<SgtNode>,
    },
}

impl SgtNode {
    fn leaf_value(&self, x: &[f64]) -> f64 {
        let mut node = self;
        loop {
            match node {
                SgtNode::Leaf(leaf) => return leaf.value,
                SgtNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => node = if x[*feature] <= *threshold { left } else { right },
            }
        }
    }

    fn leaf_mut(&mut self, x: &[f64]) -> &mut SgtLeaf {
        match self {
            SgtNode::Leaf(leaf) => leaf,
            SgtNode::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                if x[*feature] <= *threshold {
                    left.leaf_mut(x)
                } else {
                    right.leaf_mut(x)
                }
            }
        }
    }

    fn count_splits(&self) -> usize {
        match self {
            SgtNode::Leaf(_) => 0,
            SgtNode::Split { left, right, .. } => 1 + left.count_splits() + right.count_splits(),
        }
    }
}

/// Outcome of one split evaluation, exposed for inspection in tests.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitTest {
    pub feature: usize,
    pub threshold: f64,
    pub score: f64,
    pub mean_delta: f64,
    pub p_value: f64,
    pub n_candidates: usize,
}

struct Best {
    feature: usize,
    cut: usize,
    score: f64,
    left: GradStats,
    right: GradStats,
}

fn evaluate_split(grids: &[FeatureGrid], lambda: f64, min_child: f64) -> Option<(Best, usize, GradStats)> {
    let mut best: Option<Best> = None;
    let mut n_candidates = 0;
    let mut leaf_stats = GradStats::default();
    if let Some(g) = grids.iter().find(|g| !g.thresholds.is_empty()).or(grids.first()) {
        for b in &g.bins {
            leaf_stats = leaf_stats.merge(b);
        }
    }
    for (feature, grid) in grids.iter().enumerate() {
        let mut left = GradStats::default();
        for cut in 0..grid.thresholds.len() {
            left = left.merge(&grid.bins[cut]);
            let right = grid.bins[cut + 1..]
                .iter()
                .fold(GradStats::default(), |acc, b| acc.merge(b));
            if left.n < min_child || right.n < min_child {
                continue;
            }
            n_candidates += 1;
            let score = left.score(lambda) + right.score(lambda) - leaf_stats.score(lambda);
            if best.as_ref().is_none_or(|b| score > b.score) {
                best = Some(Best {
                    feature,
                    cut,
                    score,
                    left,
                    right,
                });
            }
        }
    }
    best.map(|b| (b, n_candidates, leaf_stats))
}

/// Mean and sample variance of the per-instance loss change of splitting
/// instead of applying the leaf's own Newton step.
fn loss_delta_moments(parent: &GradStats, children: [&GradStats; 2], lambda: f64) -> (f64, f64) {
    let leaf_delta = parent.delta(lambda);
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for child in children {
        let d = child.delta(lambda);
        let a = d - leaf_delta;
        let b = 0.5 * (d * d - leaf_delta * leaf_delta);
        sum += a * child.g + b * child.h;
        sum_sq += a * a * child.gg + 2.0 * a * b * child.gh + b * b * child.hh;
    }
    let n = parent.n;
    let mean = sum / n;
    let var = if n > 1.0 {
        ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0)
    } else {
        0.0
    };
    (mean, var)
}

fn one_sided_p_value(mean: f64, var: f64, n: f64) -> f64 {
    if n < 2.0 {
        return 1.0;
    }
    if var <= 0.0 {
        return if mean < 0.0 { 0.0 } else { 1.0 };
    }
    let t = mean / (var / n).sqrt();
    StudentsT::new(0.0, 1.0, n - 1.0).map_or(1.0, |dist| dist.cdf(t))
}

#[derive(Debug, Clone, PartialEq)]
struct ClassTree {
    root: SgtNode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sgt {
    trees: Vec<ClassTree>,
    config: SgtConfig,
    n_classes: usize,
    dim: usize,
    ranges: Vec<(f64, f64)>,
    n_learned: u64,
    last_test: Option<SplitTest>,
}

impl Sgt {
    pub fn new(n_classes: usize, dim: usize, config: SgtConfig) -> Self {
        let root = SgtNode::Leaf(SgtLeaf {
            value: 0.0,
            total: GradStats::default(),
            since_update: 0,
            bounds: vec![(f64::NEG_INFINITY, f64::INFINITY); dim],
            grids: None,
        });
        Sgt {
            trees: vec![ClassTree { root }; n_classes],
            config,
            n_classes,
            dim,
            ranges: vec![(f64::INFINITY, f64::NEG_INFINITY); dim],
            n_learned: 0,
            last_test: None,
        }
    }

    pub fn config(&self) -> &SgtConfig {
        &self.config
    }

    /// Logit of each class tree at `x`.
    pub fn logits(&self, x: &[f64]) -> Vec<f64> {
        self.trees.iter().map(|t| t.root.leaf_value(x)).collect()
    }

    pub fn n_splits(&self) -> usize {
        self.trees.iter().map(|t| t.root.count_splits()).sum()
    }

    /// The most recent split evaluation (any class tree).
    pub fn last_split_test(&self) -> Option<SplitTest> {
        self.last_test
    }

    /// Sets the value of the root leaf of one class tree.
    pub fn set_root_value(&mut self, class: usize, value: f64) {
        if let SgtNode::Leaf(leaf) = &mut self.trees[class].root {
            leaf.value = value;
        }
    }

    fn grids_for(&self, bounds: &[(f64, f64)]) -> Vec<FeatureGrid> {
        self.ranges
            .iter()
            .zip(bounds)
            .map(|(&(gmin, gmax), &(lo, hi))| {
                FeatureGrid::new(gmin.max(lo), gmax.min(hi), self.config.n_thresholds)
            })
            .collect()
    }
}

impl IncrementalClassifier for Sgt {
    fn name(&self) -> &'static str {
        "sgt"
    }

    fn n_classes(&self) -> usize {
        self.n_classes
    }

    fn predict(&self, x: &[f64]) -> Result<Prediction> {
        check_dim(self.dim, x)?;
        Ok(Prediction::softmax(&self.logits(x)))
    }

    fn learn(&mut self, x: &[f64], y: usize) -> Result<()> {
        check_dim(self.dim, x)?;
        check_label(self.n_classes, y)?;
        for (range, &v) in self.ranges.iter_mut().zip(x) {
            range.0 = range.0.min(v);
            range.1 = range.1.max(v);
        }
        self.n_learned += 1;
        let cfg = self.config;
        let ready = self.n_learned >= cfg.warmup;

        for class in 0..self.n_classes {
            let bounds = match self.trees[class].root.leaf_mut(x) {
                leaf if leaf.grids.is_none() && ready => Some(leaf.bounds.clone()),
                _ => None,
            };
            let fresh = bounds.map(|b| self.grids_for(&b));
            let leaf = self.trees[class].root.leaf_mut(x);
            if let Some(grids) = fresh {
                leaf.grids = Some(grids);
            }

            let target = f64::from(u8::from(class == y));
            let (g, h) = logistic_grad_hess(leaf.value, target);
            leaf.total.add(g, h);
            if let Some(grids) = leaf.grids.as_mut() {
                for (grid, &v) in grids.iter_mut().zip(x) {
                    let bin = grid.bin_of(v);
                    grid.bins[bin].add(g, h);
                }
            }
            leaf.since_update += 1;
            if leaf.since_update < cfg.grace_period {
                continue;
            }

            let mut split = None;
            if let Some((best, n_candidates, parent)) =
                leaf.grids.as_deref().and_then(|g| evaluate_split(g, cfg.lambda, cfg.min_child.max(1) as f64))
            {
                let (mean, var) = loss_delta_moments(&parent, [&best.left, &best.right], cfg.lambda);
                let p_value = one_sided_p_value(mean, var, parent.n);
                let threshold = leaf.grids.as_ref().expect("grids present")[best.feature].thresholds[best.cut];
                self.last_test = Some(SplitTest {
                    feature: best.feature,
                    threshold,
                    score: best.score,
                    mean_delta: mean,
                    p_value,
                    n_candidates,
                });
                if mean < 0.0 && p_value < cfg.alpha / n_candidates as f64 {
                    split = Some((best, threshold));
                }
            }

            match split {
                Some((best, threshold)) => {
                    let mut left_bounds = leaf.bounds.clone();
                    let mut right_bounds = leaf.bounds.clone();
                    left_bounds[best.feature].1 = threshold;
                    right_bounds[best.feature].0 = threshold;
                    let base = leaf.value;
                    let make = |stats: &GradStats, bounds: Vec<(f64, f64)>, grids| {
                        Box::new(SgtNode::Leaf(SgtLeaf {
                            value: base + stats.delta(cfg.lambda),
                            total: GradStats::default(),
                            since_update: 0,
                            bounds,
                            grids: Some(grids),
                        }))
                    };
                    let left = make(&best.left, left_bounds.clone(), self.grids_for(&left_bounds));
                    let right = make(&best.right, right_bounds.clone(), self.grids_for(&right_bounds));
                    let node = replace_leaf(&mut self.trees[class].root, x);
                    *node = SgtNode::Split {
                        feature: best.feature,
                        threshold,
                        left,
                        right,
                    };
                }
                None => {
                    leaf.value += leaf.total.delta(cfg.lambda);
                    leaf.total = GradStats::default();
                    leaf.since_update = 0;
                    if let Some(grids) = leaf.grids.as_mut() {
                        for grid in grids {
                            grid.bins.iter_mut().for_each(|b| *b = GradStats::default());
                        }
                    }
                }
            }
        }
        Ok(())
    }

    fn n_learned(&self) -> u64 {
        self.n_learned
    }
}

/// The node holding the leaf `x` routes to.
fn replace_leaf<'a>(node: &'a mut SgtNode, x: &[f64]) -> &'a mut SgtNode {
    match node {
        SgtNode::Leaf(_) => node,
        SgtNode::Split {
            feature,
            threshold,
            left,
            right,
        } => {
            if x[*feature] <= *threshold {
                replace_leaf(left, x)
            } else {
                replace_leaf(right, x)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;
    use rand::Rng;

    #[test]
    fn gradient_at_zero() {
        assert_eq!(logistic_grad_hess(0.0, 1.0), (-0.5, 0.25));
        assert_eq!(logistic_grad_hess(0.0, 0.0), (0.5, 0.25));
    }

    #[test]
    fn untrained_is_uniform() {
        let m = Sgt::new(3, 2, SgtConfig::default());
        assert_eq!(m.predict(&[1.0, 2.0]).unwrap(), Prediction::uniform(3));
    }

    #[test]
    fn single_logit_softmax() {
        let mut m = Sgt::new(3, 1, SgtConfig::default());
        m.set_root_value(0, 2.0);
        let p = m.predict(&[0.0]).unwrap();
        let e2 = 2f64.exp();
        assert!((p.probs()[0] - e2 / (e2 + 2.0)).abs() < 1e-12);
        assert!((p.probs()[0] - 0.7869).abs() < 1e-4);
        assert!((p.probs()[1] - 0.1065).abs() < 1e-4);
        for c in 0..3 {
            m.set_root_value(c, [2.0, 0.0, 0.0][c] + 5.0);
        }
        for (a, b) in m.predict(&[0.0]).unwrap().probs().iter().zip(p.probs()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn pure_stream_drives_leaf_value_up_monotonically() {
        let mut m = Sgt::new(3, 1, SgtConfig::default());
        let mut prev = 0.0;
        for i in 1..=1000 {
            m.learn(&[0.0], 1).unwrap();
            let v = m.logits(&[0.0])[1];
            assert!(v >= prev);
            prev = v;
            if i == 200 {
                assert!(v > 0.0);
            }
        }
        assert!(m.predict(&[0.0]).unwrap().probs()[1] > 0.9);
        assert_eq!(m.n_splits(), 0);
    }

    #[test]
    fn informative_feature_is_split_on() {
        let mut rng = SeededRng::new(3);
        let mut m = Sgt::new(2, 2, SgtConfig::default());
        for _ in 0..2000 {
            let x0: f64 = rng.random_range(-1.0..1.0);
            let x1: f64 = rng.random_range(-1.0..1.0);
            m.learn(&[x0, x1], usize::from(x0 > 0.2)).unwrap();
        }
        assert!(m.n_splits() >= 2);
        assert!(m.predict(&[0.8, 0.0]).unwrap().probs()[1] > 0.8);
        assert!(m.predict(&[-0.8, 0.0]).unwrap().probs()[0] > 0.8);
    }
}
