//! Hoeffding tree (VFDT) with Gaussian numeric observers, and its adaptive
//! variant that monitors every node's error with ADWIN and grows alternate
//! subtrees after an error increase.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::adwin::{Adwin, DEFAULT_ADWIN_DELTA};
use super::observer::GaussianObserver;
use super::split::{hoeffding_bound, info_gain};
use crate::error::Result;
use crate::learners::{check_dim, check_label, IncrementalClassifier};
use crate::types::{argmax, Prediction};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HtConfig {
    pub grace_period: u64,
    pub delta: f64,
    pub tau: f64,
    pub n_thresholds: usize,
}

impl Default for HtConfig {
    fn default() -> Self {
        HtConfig {
            grace_period: 200,
            delta: 1e-7,
            tau: 0.05,
            n_thresholds: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Leaf {
    counts: Vec<u64>,
    observers: Vec<GaussianObserver>,
    since_attempt: u64,
}

impl Leaf {
    fn new(counts: Vec<u64>, dim: usize) -> Self {
        let n_classes = counts.len();
        Leaf {
            counts,
            observers: vec![GaussianObserver::new(n_classes); dim],
            since_attempt: 0,
        }
    }

    fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    fn distribution(&self) -> Prediction {
        let c = self.counts.len() as f64;
        let n = self.total() as f64;
        let probs = self.counts.iter().map(|&k| (k as f64 + 1.0) / (n + c)).collect();
        Prediction::new(probs).unwrap_or_else(|_| Prediction::uniform(self.counts.len()))
    }

    fn majority(&self) -> usize {
        let counts: Vec<f64> = self.counts.iter().map(|&c| c as f64).collect();
        argmax(&counts)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum NodeKind {
    Leaf(Leaf),
    Split {
        feature: usize,
        threshold: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
}

#[derive(Debug, Clone, PartialEq)]
struct Monitor {
    adwin: Adwin,
    alternate: Option<Box<Node>>,
}

#[derive(Debug, Clone, PartialEq)]
struct Node {
    kind: NodeKind,
    monitor: Option<Box<Monitor>>,
}

/// Flattened pre-order view of a tree, for comparing structures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum NodeSummary {
    Split { feature: usize, threshold: f64 },
    Leaf { counts: Vec<u64> },
}

/// Drift bookkeeping of the adaptive variant.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdaptiveStats {
    pub drift_signals: u64,
    pub alternates_started: u64,
    pub replacements: u64,
    pub alternates_pruned: u64,
}

struct Ctx<'a> {
    config: &'a HtConfig,
    n_classes: usize,
    dim: usize,
    adwin_delta: Option<f64>,
}

impl Ctx<'_> {
    fn new_node(&self, counts: Vec<u64>) -> Node {
        Node {
            kind: NodeKind::Leaf(Leaf::new(counts, self.dim)),
            monitor: self.adwin_delta.map(|delta| {
                Box::new(Monitor {
                    adwin: Adwin::new(delta).expect("validated delta"),
                    alternate: None,
                })
            }),
        }
    }
}

impl Node {
    fn leaf_for(&self, x: &[f64]) -> &Leaf {
        let mut node = self;
        loop {
            match &node.kind {
                NodeKind::Leaf(leaf) => return leaf,
                NodeKind::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => node = if x[*feature] <= *threshold { left } else { right },
            }
        }
    }

    fn learn(&mut self, x: &[f64], y: usize, ctx: &Ctx, stats: &mut AdaptiveStats) {
        let mut replace = false;
        if self.monitor.is_some() {
            let wrong = self.leaf_for(x).majority() != y;
            let monitor = self.monitor.as_mut().expect("checked above");
            let before = monitor.adwin.mean();
            let drift = monitor
                .adwin
                .update(f64::from(u8::from(wrong)))
                .expect("indicator lies in [0,1]");
            let increased = drift && monitor.adwin.mean() > before;
            if drift {
                stats.drift_signals += 1;
            }
            if increased {
                if monitor.alternate.is_none() {
                    monitor.alternate = Some(Box::new(ctx.new_node(vec![0; ctx.n_classes])));
                    stats.alternates_started += 1;
                }
            } else if let Some(alt) = &monitor.alternate {
                let alt_adwin = &alt.monitor.as_ref().expect("alternates are monitored").adwin;
                match compare_alternate(&monitor.adwin, alt_adwin) {
                    Some(Ordering::Less) => replace = true,
                    Some(Ordering::Greater) => {
                        monitor.alternate = None;
                        stats.alternates_pruned += 1;
                    }
                    _ => {}
                }
            }
            if let Some(alt) = monitor.alternate.as_mut() {
                alt.learn(x, y, ctx, stats);
            }
        }
        if replace {
            let alt = self
                .monitor
                .as_mut()
                .and_then(|m| m.alternate.take())
                .expect("replacement needs an alternate");
            *self = *alt;
            stats.replacements += 1;
            return;
        }

        match &mut self.kind {
            NodeKind::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                let child = if x[*feature] <= *threshold { left } else { right };
                child.learn(x, y, ctx, stats);
            }
            NodeKind::Leaf(leaf) => {
                leaf.counts[y] += 1;
                for (obs, &v) in leaf.observers.iter_mut().zip(x) {
                    obs.update(v, y);
                }
                leaf.since_attempt += 1;
                if leaf.since_attempt >= ctx.config.grace_period {
                    leaf.since_attempt = 0;
                    if let Some(split) = attempt_split(leaf, ctx) {
                        let (left, right) = split.children;
                        self.kind = NodeKind::Split {
                            feature: split.feature,
                            threshold: split.threshold,
                            left: Box::new(ctx.new_node(left)),
                            right: Box::new(ctx.new_node(right)),
                        };
                    }
                }
            }
        }
    }

    fn summarize(&self, out: &mut Vec<NodeSummary>) {
        match &self.kind {
            NodeKind::Leaf(leaf) => out.push(NodeSummary::Leaf {
                counts: leaf.counts.clone(),
            }),
            NodeKind::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                out.push(NodeSummary::Split {
                    feature: *feature,
                    threshold: *threshold,
                });
                left.summarize(out);
                right.summarize(out);
            }
        }
    }

    fn depth(&self) -> usize {
        match &self.kind {
            NodeKind::Leaf(_) => 0,
            NodeKind::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    fn has_alternate(&self) -> bool {
        self.monitor.as_ref().is_some_and(|m| m.alternate.is_some())
            || match &self.kind {
                NodeKind::Leaf(_) => false,
                NodeKind::Split { left, right, .. } => left.has_alternate() || right.has_alternate(),
            }
    }
}

/// Both error windows must exceed this width before an alternate is judged.
const MIN_COMPARE_WIDTH: u64 = 300;
const COMPARE_DELTA: f64 = 0.05;

/// `Less` when the alternate's error is significantly lower, `Greater`
/// when significantly higher.
fn compare_alternate(main: &Adwin, alt: &Adwin) -> Option<Ordering> {
    if main.width() <= MIN_COMPARE_WIDTH || alt.width() <= MIN_COMPARE_WIDTH {
        return None;
    }
    let (old, new) = (main.mean(), alt.mean());
    let inv_n = 1.0 / alt.width() as f64 + 1.0 / main.width() as f64;
    let bound = (2.0 * old * (1.0 - old) * (2.0 / COMPARE_DELTA).ln() * inv_n).sqrt();
    if bound < old - new {
        Some(Ordering::Less)
    } else if bound < new - old {
        Some(Ordering::Greater)
    } else {
        None
    }
}

struct SplitChoice {
    feature: usize,
    threshold: f64,
    children: (Vec<u64>, Vec<u64>),
}

/// Per-class counts seen by the leaf's observers (inherited counts excluded).
fn observed_counts(leaf: &Leaf) -> Vec<f64> {
    let n_classes = leaf.counts.len();
    match leaf.observers.first() {
        Some(obs) => (0..n_classes).map(|c| obs.class(c).count).collect(),
        None => vec![0.0; n_classes],
    }
}

type Candidate = (f64, usize, f64, Vec<f64>, Vec<f64>);

/// Best `(gain, feature, threshold, left, right)` for each splittable feature.
fn best_per_feature(leaf: &Leaf, observed: &[f64], n_thresholds: usize) -> Vec<Candidate> {
    let mut out = Vec::new();
    for (feature, obs) in leaf.observers.iter().enumerate() {
        let mut best: Option<(f64, f64, Vec<f64>, Vec<f64>)> = None;
        for t in obs.candidate_thresholds(n_thresholds) {
            let (left, right) = obs.split_counts(t);
            let Ok(gain) = info_gain(observed, &left, &right) else {
                continue;
            };
            if best.as_ref().is_none_or(|b| gain > b.0) {
                best = Some((gain, t, left, right));
            }
        }
        if let Some((gain, t, left, right)) = best {
            out.push((gain, feature, t, left, right));
        }
    }
    out
}

fn attempt_split(leaf: &Leaf, ctx: &Ctx) -> Option<SplitChoice> {
    let observed = observed_counts(leaf);
    if observed.iter().filter(|&&c| c > 0.0).count() < 2 {
        return None;
    }
    let n_observed = observed.iter().sum::<f64>() as u64;
    let mut candidates = best_per_feature(leaf, &observed, ctx.config.n_thresholds);
    candidates.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let best = candidates.first()?;
    // The null split (no split) always competes with merit 0.
    let second = candidates.get(1).map_or(0.0, |c| c.0.max(0.0));
    let range = (ctx.n_classes as f64).log2().max(f64::MIN_POSITIVE);
    let eps = hoeffding_bound(range, ctx.config.delta, n_observed).ok()?;
    if !(best.0 > 0.0 && (best.0 - second > eps || eps < ctx.config.tau)) {
        return None;
    }
    let (_, feature, threshold, left_est, right_est) = best;
    // Children inherit the leaf's counts, apportioned by the estimate.
    let mut left = Vec::with_capacity(leaf.counts.len());
    let mut right = Vec::with_capacity(leaf.counts.len());
    for (c, &count) in leaf.counts.iter().enumerate() {
        let mass = left_est[c] + right_est[c];
        let share = if mass > 0.0 { left_est[c] / mass } else { 0.5 };
        let l = ((count as f64) * share).round().clamp(0.0, count as f64) as u64;
        left.push(l);
        right.push(count - l);
    }
    Some(SplitChoice {
        feature: *feature,
        threshold: *threshold,
        children: (left, right),
    })
}

/// Hoeffding tree; with [`HoeffdingTree::adaptive`] it becomes a Hoeffding
/// adaptive tree.
#[derive(Debug, Clone, PartialEq)]
pub struct HoeffdingTree {
    root: Node,
    config: HtConfig,
    n_classes: usize,
    dim: usize,
    adwin_delta: Option<f64>,
    stats: AdaptiveStats,
    n_learned: u64,
}

impl HoeffdingTree {
    pub fn new(n_classes: usize, dim: usize, config: HtConfig) -> Self {
        Self::build(n_classes, dim, config, None)
    }

    pub fn adaptive(n_classes: usize, dim: usize, config: HtConfig, adwin_delta: f64) -> Result<Self> {
        Adwin::new(adwin_delta)?;
        Ok(Self::build(n_classes, dim, config, Some(adwin_delta)))
    }

    pub fn adaptive_default(n_classes: usize, dim: usize) -> Self {
        Self::build(n_classes, dim, HtConfig::default(), Some(DEFAULT_ADWIN_DELTA))
    }

    fn build(n_classes: usize, dim: usize, config: HtConfig, adwin_delta: Option<f64>) -> Self {
        let ctx = Ctx {
            config: &config,
            n_classes,
            dim,
            adwin_delta,
        };
        let root = ctx.new_node(vec![0; n_classes]);
        HoeffdingTree {
            root,
            config,
            n_classes,
            dim,
            adwin_delta,
            stats: AdaptiveStats::default(),
            n_learned: 0,
        }
    }

    pub fn is_adaptive(&self) -> bool {
        self.adwin_delta.is_some()
    }

    pub fn config(&self) -> &HtConfig {
        &self.config
    }

    pub fn adaptive_stats(&self) -> AdaptiveStats {
        self.stats
    }

    /// Pre-order summary of the main tree (alternates excluded).
    pub fn structure(&self) -> Vec<NodeSummary> {
        let mut out = Vec::new();
        self.root.summarize(&mut out);
        out
    }

    pub fn n_leaves(&self) -> usize {
        self.structure()
            .iter()
            .filter(|n| matches!(n, NodeSummary::Leaf { .. }))
            .count()
    }

    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    pub fn has_alternate(&self) -> bool {
        self.root.has_alternate()
    }

    /// Sum of class counts over all leaves of the main tree.
    pub fn leaf_count_total(&self) -> u64 {
        self.structure()
            .iter()
            .map(|n| match n {
                NodeSummary::Leaf { counts } => counts.iter().sum(),
                NodeSummary::Split { .. } => 0,
            })
            .sum()
    }

    /// Builds a one-split tree with given leaf counts; `x[feature] <= threshold` goes left.
    pub fn stump(
        dim: usize,
        feature: usize,
        threshold: f64,
        left_counts: Vec<u64>,
        right_counts: Vec<u64>,
        config: HtConfig,
    ) -> Self {
        let mut tree = Self::new(left_counts.len(), dim, config);
        tree.root.kind = NodeKind::Split {
            feature,
            threshold,
            left: Box::new(Node {
                kind: NodeKind::Leaf(Leaf::new(left_counts, dim)),
                monitor: None,
            }),
            right: Box::new(Node {
                kind: NodeKind::Leaf(Leaf::new(right_counts, dim)),
                monitor: None,
            }),
        };
        tree
    }
}

impl IncrementalClassifier for HoeffdingTree {
    fn name(&self) -> &'static str {
        if self.is_adaptive() {
            "hat"
        } else {
            "ht"
        }
    }

    fn n_classes(&self) -> usize {
        self.n_classes
    }

    fn predict(&self, x: &[f64]) -> Result<Prediction> {
        check_dim(self.dim, x)?;
        Ok(self.root.leaf_for(x).distribution())
    }

    fn learn(&mut self, x: &[f64], y: usize) -> Result<()> {
        check_dim(self.dim, x)?;
        check_label(self.n_classes, y)?;
        let ctx = Ctx {
            config: &self.config,
            n_classes: self.n_classes,
            dim: self.dim,
            adwin_delta: self.adwin_delta,
        };
        self.root.learn(x, y, &ctx, &mut self.stats);
        self.n_learned += 1;
        Ok(())
    }

    fn n_learned(&self) -> u64 {
        self.n_learned
    }
}
