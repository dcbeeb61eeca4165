use crate::error::{Error, Result};

/// Hoeffding confidence radius `sqrt(R^2 ln(1/delta) / (2n))`.
pub fn hoeffding_bound(range: f64, delta: f64, n: u64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain(format!("delta must lie in (0,1), got {delta}")));
    }
    if !(range > 0.0) || n == 0 {
        return Err(Error::Domain(format!(
            "hoeffding bound needs range > 0 and n >= 1, got range {range}, n {n}"
        )));
    }
    Ok((range * range * (1.0 / delta).ln() / (2.0 * n as f64)).sqrt())
}

/// Shannon entropy in bits of a (possibly fractional) count vector.
pub fn entropy_bits(counts: &[f64]) -> f64 {
    let total: f64 = counts.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    counts
        .iter()
        .filter(|&&c| c > 0.0)
        .map(|&c| {
            let p = c / total;
            -p * p.log2()
        })
        .sum()
}

/// Information gain (bits) of splitting `parent` into `left` and `right`.
pub fn info_gain(parent: &[f64], left: &[f64], right: &[f64]) -> Result<f64> {
    if parent.len() != left.len() || parent.len() != right.len() {
        return Err(Error::InvalidSplit("count vectors differ in length".into()));
    }
    let total: f64 = parent.iter().sum();
    if !(total > 0.0) {
        return Err(Error::InvalidSplit("parent has no instances".into()));
    }
    let tol = 1e-9 * total.max(1.0);
    for ((p, l), r) in parent.iter().zip(left).zip(right) {
        if *l < 0.0 || *r < 0.0 || (l + r - p).abs() > tol {
            return Err(Error::InvalidSplit(format!(
                "children {left:?} + {right:?} do not add up to parent {parent:?}"
            )));
        }
    }
    let n_left: f64 = left.iter().sum();
    let n_right: f64 = right.iter().sum();
    let children = (n_left / total) * entropy_bits(left) + (n_right / total) * entropy_bits(right);
    Ok((entropy_bits(parent) - children).max(0.0))
}
