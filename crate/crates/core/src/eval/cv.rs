use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::rng::SeededRng;

/// Splits indices into `k` test folds, stratified by label.
///
/// Each class is shuffled and dealt round-robin; the dealing position
/// carries over between classes so overall fold sizes also differ by at
/// most one.
pub fn stratified_kfold(labels: &[usize], k: usize, rng: &mut SeededRng) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::Stratification(format!("need at least 2 folds, got {k}")));
    }
    let n_classes = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
    for (i, &y) in labels.iter().enumerate() {
        by_class[y].push(i);
    }
    for (class, members) in by_class.iter().enumerate() {
        if !members.is_empty() && members.len() < k {
            return Err(Error::Stratification(format!(
                "class {class} has {} instances, fewer than {k} folds",
                members.len()
            )));
        }
    }
    let mut folds = vec![Vec::new(); k];
    let mut next = 0;
    for members in &mut by_class {
        members.shuffle(rng);
        for &i in members.iter() {
            folds[next].push(i);
            next = (next + 1) % k;
        }
    }
    for fold in &mut folds {
        fold.sort_unstable();
    }
    Ok(folds)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainStreamSplit {
    /// Training ids in the (shuffled) order they are learned.
    pub train: Vec<usize>,
    /// Stream ids in arrival order.
    pub stream: Vec<usize>,
    pub warnings: Vec<String>,
}

/// Stratified split of the non-test ids into an initial training set of
/// `floor(train_frac * n)` ids and a shuffled stream of the rest.
pub fn partition_train_stream(
    non_test: &[usize],
    labels: &[usize],
    train_frac: f64,
    rng: &mut SeededRng,
) -> Result<TrainStreamSplit> {
    if non_test.is_empty() {
        return Err(Error::InsufficientData("no non-test instances to partition".into()));
    }
    if !(train_frac > 0.0 && train_frac < 1.0) {
        return Err(Error::Config(format!("train_frac must lie in (0,1), got {train_frac}")));
    }
    let n = non_test.len();
    let n_train = ((train_frac * n as f64) + 1e-9).floor() as usize;
    let n_classes = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
    for &id in non_test {
        by_class[labels[id]].push(id);
    }

    // Largest-remainder apportionment of the training quota across classes.
    let exact: Vec<f64> = by_class
        .iter()
        .map(|m| n_train as f64 * m.len() as f64 / n as f64)
        .collect();
    let mut quota: Vec<usize> = exact.iter().map(|q| q.floor() as usize).collect();
    let mut remaining = n_train - quota.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..n_classes).collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (exact[a] - exact[a].floor(), exact[b] - exact[b].floor());
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &c in order.iter().cycle().take(n_classes * 2) {
        if remaining == 0 {
            break;
        }
        if quota[c] < by_class[c].len() {
            quota[c] += 1;
            remaining -= 1;
        }
    }

    let mut train = Vec::with_capacity(n_train);
    let mut stream = Vec::with_capacity(n - n_train);
    let mut warnings = Vec::new();
    for (c, members) in by_class.iter_mut().enumerate() {
        members.shuffle(rng);
        if !members.is_empty() && quota[c] == 0 {
            warnings.push(format!("class {c} is absent from the training split"));
        }
        train.extend_from_slice(&members[..quota[c]]);
        stream.extend_from_slice(&members[quota[c]..]);
    }
    train.shuffle(rng);
    stream.shuffle(rng);
    Ok(TrainStreamSplit {
        train,
        stream,
        warnings,
    })
}
