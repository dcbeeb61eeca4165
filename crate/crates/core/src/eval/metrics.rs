//! Ranking metrics and summary statistics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// z-value of the two-sided 95% normal interval.
pub const Z_95: f64 = 1.96;

/// Mann-Whitney AUC: probability a random positive outscores a random
/// negative, ties counting one half. O(N log N) via average ranks.
pub fn auc_binary(scores: &[f64], positives: &[bool]) -> Result<f64> {
    if scores.len() != positives.len() {
        return Err(Error::Shape {
            expected: scores.len(),
            got: positives.len(),
        });
    }
    let n_pos = positives.iter().filter(|&&p| p).count();
    let n_neg = positives.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::UndefinedAuc("need at least one positive and one negative".into()));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::UndefinedAuc("scores contain NaN".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // Sum of 1-based average ranks of the positives.
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        let avg_rank = (i + 1 + j) as f64 / 2.0;
        let pos_in_group = order[i..j].iter().filter(|&&k| positives[k]).count();
        rank_sum += avg_rank * pos_in_group as f64;
        i = j;
    }
    let (p, n) = (n_pos as f64, n_neg as f64);
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * n))
}

/// Per-class one-vs-rest AUC for every class present among `labels`.
pub fn auc_ovr_per_class(probs: &[Vec<f64>], labels: &[usize]) -> Result<Vec<(usize, usize, f64)>> {
    if probs.len() != labels.len() {
        return Err(Error::Shape {
            expected: probs.len(),
            got: labels.len(),
        });
    }
    let n_classes = probs.first().map_or(0, Vec::len);
    if let Some(&bad) = labels.iter().find(|&&y| y >= n_classes) {
        return Err(Error::DataIntegrity(format!("label {bad} outside {n_classes} columns")));
    }
    let mut support = vec![0usize; n_classes];
    for &y in labels {
        support[y] += 1;
    }
    if support.iter().filter(|&&s| s > 0).count() < 2 {
        return Err(Error::UndefinedAuc("fewer than two classes present".into()));
    }
    let mut out = Vec::new();
    for c in (0..n_classes).filter(|&c| support[c] > 0) {
        let column: Vec<f64> = probs.iter().map(|row| row[c]).collect();
        let positives: Vec<bool> = labels.iter().map(|&y| y == c).collect();
        out.push((c, support[c], auc_binary(&column, &positives)?));
    }
    Ok(out)
}

/// One-vs-rest AUC averaged with weights proportional to class support.
/// Classes absent from `labels` are excluded.
pub fn auc_ovr_weighted(probs: &[Vec<f64>], labels: &[usize]) -> Result<f64> {
    let per_class = auc_ovr_per_class(probs, labels)?;
    let total: usize = per_class.iter().map(|(_, s, _)| s).sum();
    Ok(per_class
        .iter()
        .map(|&(_, s, auc)| auc * s as f64 / total as f64)
        .sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanCi {
    pub mean: f64,
    pub half_width: f64,
    pub n: usize,
}

/// Mean and 95% normal-approximation half-width `1.96 * s / sqrt(n)`.
pub fn mean_ci(values: &[f64]) -> Result<MeanCi> {
    let n = values.len();
    if n < 2 {
        return Err(Error::InsufficientData(format!("confidence interval needs n >= 2, got {n}")));
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    Ok(MeanCi {
        mean,
        half_width: Z_95 * var.sqrt() / (n as f64).sqrt(),
        n,
    })
}

/// Means of four contiguous quarters; earlier quarters absorb the remainder.
pub fn timeline_quartile_means(series: &[f64]) -> Result<[f64; 4]> {
    let n = series.len();
    if n < 4 {
        return Err(Error::InsufficientData(format!("quartile means need >= 4 steps, got {n}")));
    }
    let mut out = [0.0; 4];
    let mut start = 0;
    for (q, slot) in out.iter_mut().enumerate() {
        let len = n / 4 + usize::from(q < n % 4);
        let part = &series[start..start + len];
        *slot = part.iter().sum::<f64>() / len as f64;
        start += len;
    }
    Ok(out)
}

/// Distribution summary with population standard deviation and
/// linearly interpolated quartiles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Distribution {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub std: f64,
    pub q1: f64,
    pub q2: f64,
    pub q3: f64,
}

pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub fn describe(values: &[f64]) -> Result<Distribution> {
    if values.is_empty() {
        return Err(Error::InsufficientData("cannot describe an empty sample".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mean = sorted.iter().sum::<f64>() / n;
    let std = (sorted.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    Ok(Distribution {
        min: sorted[0],
        max: sorted[sorted.len() - 1],
        mean,
        std,
        q1: quantile(&sorted, 0.25),
        q2: quantile(&sorted, 0.5),
        q3: quantile(&sorted, 0.75),
    })
}
