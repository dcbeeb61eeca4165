//! Adaptive windowing change detector over values in `[0, 1]`.
//!
//! The window is stored as an exponential histogram: row `i` holds at most
//! `max_buckets` buckets of `2^i` values each, newest at the back. Every
//! update scans all bucket boundaries as cut points and drops the older
//! sub-window while the two sides' means differ by at least
//! `sqrt(ln(4 / delta') / (2m))`, with `m = 1 / (1/n0 + 1/n1)` and
//! `delta' = delta / n`.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_ADWIN_DELTA: f64 = 0.002;
pub const DEFAULT_MAX_BUCKETS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct Bucket {
    sum: f64,
    count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adwin {
    delta: f64,
    max_buckets: usize,
    rows: Vec<VecDeque<Bucket>>,
    total: f64,
    width: u64,
    detections: u64,
}

impl Default for Adwin {
    fn default() -> Self {
        Adwin::new(DEFAULT_ADWIN_DELTA).expect("default delta is valid")
    }
}

/// Cut threshold for sub-windows combined into `m = 1/(1/n0 + 1/n1)`.
pub fn cut_threshold(m: f64, delta_prime: f64) -> f64 {
    ((1.0 / (2.0 * m)) * (4.0 / delta_prime).ln()).sqrt()
}

impl Adwin {
    pub fn new(delta: f64) -> Result<Self> {
        Self::with_buckets(delta, DEFAULT_MAX_BUCKETS)
    }

    pub fn with_buckets(delta: f64, max_buckets: usize) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::Domain(format!("adwin delta must lie in (0,1), got {delta}")));
        }
        if max_buckets < 2 {
            return Err(Error::Domain("adwin needs at least 2 buckets per row".into()));
        }
        Ok(Adwin {
            delta,
            max_buckets,
            rows: Vec::new(),
            total: 0.0,
            width: 0,
            detections: 0,
        })
    }

    pub fn width(&self) -> u64 {
        self.width
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn mean(&self) -> f64 {
        if self.width == 0 {
            0.0
        } else {
            self.total / self.width as f64
        }
    }

    pub fn detections(&self) -> u64 {
        self.detections
    }

    /// Bucket sizes from oldest to newest.
    pub fn bucket_sizes(&self) -> Vec<u64> {
        self.rows
            .iter()
            .rev()
            .flat_map(|row| row.iter().map(|b| b.count))
            .collect()
    }

    /// Adds a value and reports whether the window was cut.
    pub fn update(&mut self, value: f64) -> Result<bool> {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::Domain(format!("adwin input must lie in [0,1], got {value}")));
        }
        self.insert(value);
        let mut drift = false;
        while let Some(drop_count) = self.find_cut() {
            self.drop_oldest(drop_count);
            drift = true;
        }
        if drift {
            self.detections += 1;
        }
        Ok(drift)
    }

    fn insert(&mut self, value: f64) {
        if self.rows.is_empty() {
            self.rows.push(VecDeque::new());
        }
        self.rows[0].push_back(Bucket { sum: value, count: 1 });
        self.total += value;
        self.width += 1;
        let mut row = 0;
        while self.rows[row].len() > self.max_buckets {
            let a = self.rows[row].pop_front().expect("row over capacity");
            let b = self.rows[row].pop_front().expect("row over capacity");
            if row + 1 == self.rows.len() {
                self.rows.push(VecDeque::new());
            }
            self.rows[row + 1].push_back(Bucket {
                sum: a.sum + b.sum,
                count: a.count + b.count,
            });
            row += 1;
        }
    }

    /// Number of oldest buckets to drop, if some boundary is a significant cut.
    fn find_cut(&self) -> Option<usize> {
        if self.width < 2 {
            return None;
        }
        let n = self.width as f64;
        let delta_prime = self.delta / n;
        let mut n0 = 0.0;
        let mut sum0 = 0.0;
        let mut buckets = 0;
        for row in self.rows.iter().rev() {
            for bucket in row {
                n0 += bucket.count as f64;
                sum0 += bucket.sum;
                buckets += 1;
                let n1 = n - n0;
                if n1 < 1.0 {
                    return None;
                }
                let mean0 = sum0 / n0;
                let mean1 = (self.total - sum0) / n1;
                let m = 1.0 / (1.0 / n0 + 1.0 / n1);
                if (mean0 - mean1).abs() >= cut_threshold(m, delta_prime) {
                    return Some(buckets);
                }
            }
        }
        None
    }

    fn drop_oldest(&mut self, mut buckets: usize) {
        while buckets > 0 {
            let Some(row) = self.rows.iter_mut().rev().find(|r| !r.is_empty()) else {
                return;
            };
            let b = row.pop_front().expect("non-empty row");
            self.total -= b.sum;
            self.width -= b.count;
            buckets -= 1;
        }
        while self.rows.last().is_some_and(VecDeque::is_empty) {
            self.rows.pop();
        }
        if self.width == 0 {
            self.total = 0.0;
        }
    }
}
