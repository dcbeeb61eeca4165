//! Marginal mutual-information ranking of embedding dimensions against the
//! class label, and top-K selection with K = floor(sqrt(N)).
//!
//! The estimator is the nearest-neighbour (continuous feature, discrete
//! label) variant of the Kraskov estimator:
//!
//! ```text
//! I = psi(N) - <psi(N_y)> + psi(k) - <psi(m_i)>
//! ```
//!
//! where `N_y` is the size of instance i's class, the radius is the distance
//! to its k-th nearest same-class neighbour, and `m_i` counts every point
//! (itself included) strictly inside that radius.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stage, SeededRng};
use crate::types::Instance;

/// Neighbour count used for ranking.
pub const DEFAULT_MI_NEIGHBORS: usize = 3;

const JITTER_SCALE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MiScore {
    pub feature_index: usize,
    pub mi_nats: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionMask {
    /// Selected feature indices, best first.
    pub selected: Vec<usize>,
    pub n_train: usize,
}

impl SelectionMask {
    pub fn full(dim: usize) -> Self {
        SelectionMask {
            selected: (0..dim).collect(),
            n_train: 0,
        }
    }

    pub fn k(&self) -> usize {
        self.selected.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSelection {
    pub mask: SelectionMask,
    /// Scores for every feature, in feature-index order.
    pub scores: Vec<MiScore>,
    pub warnings: Vec<String>,
}

/// Digamma function for positive arguments.
pub fn digamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("digamma requires x > 0, got {x}")));
    }
    let mut x = x;
    let mut acc = 0.0;
    while x < 10.0 {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    // Asymptotic expansion; next omitted term is O(x^-12).
    let series = inv2
        * (1.0 / 12.0
            - inv2 * (1.0 / 120.0 - inv2 * (1.0 / 252.0 - inv2 * (1.0 / 240.0 - inv2 / 132.0))));
    Ok(acc + x.ln() - 0.5 * inv - series)
}

// Caller guarantees n >= 1.
fn psi(n: usize) -> f64 {
    digamma(n as f64).expect("positive count")
}

/// Mutual information (nats) between a real-valued feature and class labels.
pub fn estimate_mi_cd(values: &[f64], labels: &[usize], k: usize) -> Result<f64> {
    if values.len() != labels.len() {
        return Err(Error::Shape {
            expected: values.len(),
            got: labels.len(),
        });
    }
    if k == 0 {
        return Err(Error::Domain("neighbour count k must be >= 1".into()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("feature values must be finite".into()));
    }
    let n = values.len();
    let n_classes = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
    for (i, &y) in labels.iter().enumerate() {
        by_class[y].push(i);
    }
    for (class, members) in by_class.iter().enumerate() {
        if !members.is_empty() && members.len() < k + 1 {
            return Err(Error::InsufficientData(format!(
                "class {class} has {} instances, need at least {}",
                members.len(),
                k + 1
            )));
        }
    }
    if n == 0 {
        return Err(Error::InsufficientData("no instances".into()));
    }

    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if hi - lo == 0.0 {
        return Ok(0.0);
    }

    let mut sorted_all = values.to_vec();
    sorted_all.sort_by(f64::total_cmp);

    let mut radius = vec![0.0; n];
    for members in by_class.iter().filter(|m| !m.is_empty()) {
        let class_vals: Vec<f64> = members.iter().map(|&i| values[i]).collect();
        let mut order: Vec<usize> = (0..members.len()).collect();
        order.sort_by(|&a, &b| class_vals[a].total_cmp(&class_vals[b]));
        let sorted: Vec<f64> = order.iter().map(|&o| class_vals[o]).collect();
        for (pos, &o) in order.iter().enumerate() {
            radius[members[o]] = kth_neighbor_distance(&sorted, pos, k);
        }
    }

    let mut sum_class = 0.0;
    let mut sum_m = 0.0;
    for i in 0..n {
        let x = values[i];
        let d = radius[i];
        let lower = sorted_all.partition_point(|&v| v <= x - d);
        let upper = sorted_all.partition_point(|&v| v < x + d);
        let m = (upper - lower).max(1);
        sum_m += psi(m);
        sum_class += psi(by_class[labels[i]].len());
    }
    let nf = n as f64;
    let mi = psi(n) - sum_class / nf + psi(k) - sum_m / nf;
    Ok(mi.max(0.0))
}

/// Distance from `sorted[pos]` to its k-th nearest other element.
fn kth_neighbor_distance(sorted: &[f64], pos: usize, k: usize) -> f64 {
    let x = sorted[pos];
    let (mut left, mut right) = (pos, pos + 1);
    let mut dist = 0.0;
    for _ in 0..k {
        let dl = if left > 0 { x - sorted[left - 1] } else { f64::INFINITY };
        let dr = if right < sorted.len() { sorted[right] - x } else { f64::INFINITY };
        if dl <= dr {
            dist = dl;
            left -= 1;
        } else {
            dist = dr;
            right += 1;
        }
    }
    dist
}

/// Adds seeded noise of magnitude `1e-10 * range` when the column has exact duplicates.
pub fn jitter_duplicates(values: &mut [f64], rng: &mut SeededRng) {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let has_duplicates = sorted.windows(2).any(|w| w[0] == w[1]);
    let range = sorted.last().copied().unwrap_or(0.0) - sorted.first().copied().unwrap_or(0.0);
    if !has_duplicates || range <= 0.0 {
        return;
    }
    let scale = JITTER_SCALE * range;
    for v in values.iter_mut() {
        *v += scale * rng.random_range(-1.0..1.0);
    }
}

/// K = floor(sqrt(N)), at least 1, at most `dim`.
pub fn selection_size(n_train: usize, dim: usize) -> usize {
    let mut k = (n_train as f64).sqrt().floor() as usize;
    while k * k > n_train {
        k -= 1;
    }
    while (k + 1) * (k + 1) <= n_train {
        k += 1;
    }
    k.max(1).min(dim)
}

/// Ranks every feature column by MI with the label and keeps the top K.
pub fn select_top_k(instances: &[Instance], seed: u64) -> Result<FeatureSelection> {
    if instances.is_empty() {
        return Err(Error::InsufficientData("feature selection needs labeled instances".into()));
    }
    let dim = instances[0].dim();
    if dim == 0 {
        return Err(Error::InsufficientData("instances have no features".into()));
    }
    let labels: Vec<usize> = instances
        .iter()
        .map(|inst| {
            inst.label.ok_or_else(|| {
                Error::DataIntegrity(format!("instance {} is unlabeled", inst.id))
            })
        })
        .collect::<Result<_>>()?;
    if let Some(bad) = instances.iter().find(|inst| inst.dim() != dim) {
        return Err(Error::Shape {
            expected: dim,
            got: bad.dim(),
        });
    }

    let outcomes: Vec<(f64, Option<String>)> = (0..dim)
        .into_par_iter()
        .map(|j| {
            let mut column: Vec<f64> = instances.iter().map(|inst| inst.features[j]).collect();
            let mut rng = SeededRng::for_path(seed, &[stage::FEATURE_JITTER, j as u64]);
            jitter_duplicates(&mut column, &mut rng);
            match estimate_mi_cd(&column, &labels, DEFAULT_MI_NEIGHBORS) {
                Ok(mi) => (mi, None),
                Err(e) => (0.0, Some(format!("feature {j}: {e}"))),
            }
        })
        .collect();

    let scores: Vec<MiScore> = outcomes
        .iter()
        .enumerate()
        .map(|(feature_index, (mi, _))| MiScore {
            feature_index,
            mi_nats: *mi,
        })
        .collect();
    let warnings = outcomes.into_iter().filter_map(|(_, w)| w).collect();

    let mut ranked = scores.clone();
    ranked.sort_by(|a, b| {
        b.mi_nats
            .total_cmp(&a.mi_nats)
            .then(a.feature_index.cmp(&b.feature_index))
    });
    let k = selection_size(instances.len(), dim);
    let selected = ranked.iter().take(k).map(|s| s.feature_index).collect();

    Ok(FeatureSelection {
        mask: SelectionMask {
            selected,
            n_train: instances.len(),
        },
        scores,
        warnings,
    })
}

/// Restricts an instance's features to the mask's indices, in mask order.
pub fn apply_mask(instance: &Instance, mask: &SelectionMask) -> Result<Instance> {
    let features = mask
        .selected
        .iter()
        .map(|&j| {
            instance.features.get(j).copied().ok_or(Error::Shape {
                expected: j + 1,
                got: instance.dim(),
            })
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(Instance {
        id: instance.id.clone(),
        features,
        label: instance.label,
    })
}
