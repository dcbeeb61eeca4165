use serde::{Deserialize, Serialize};

use super::{check_dim, check_label, IncrementalClassifier};
use crate::error::{Error, Result};
use crate::types::Prediction;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlgrConfig {
    pub eta: f64,
    /// L2 penalty on the weights (not the bias).
    pub lambda: f64,
}

impl Default for SlgrConfig {
    fn default() -> Self {
        SlgrConfig {
            eta: 0.01,
            lambda: 0.0,
        }
    }
}

/// Streaming multinomial logistic regression trained by plain SGD on
/// cross-entropy, zero-initialized.
#[derive(Debug, Clone, PartialEq)]
pub struct Slgr {
    n_classes: usize,
    dim: usize,
    /// Row-major `n_classes x dim`.
    weights: Vec<f64>,
    bias: Vec<f64>,
    config: SlgrConfig,
    n_learned: u64,
}

impl Slgr {
    pub fn new(n_classes: usize, dim: usize, config: SlgrConfig) -> Self {
        Slgr {
            n_classes,
            dim,
            weights: vec![0.0; n_classes * dim],
            bias: vec![0.0; n_classes],
            config,
            n_learned: 0,
        }
    }

    pub fn from_parts(weights: Vec<Vec<f64>>, bias: Vec<f64>, config: SlgrConfig) -> Result<Self> {
        let n_classes = bias.len();
        if weights.len() != n_classes {
            return Err(Error::Shape {
                expected: n_classes,
                got: weights.len(),
            });
        }
        let dim = weights.first().map_or(0, Vec::len);
        if let Some(row) = weights.iter().find(|r| r.len() != dim) {
            return Err(Error::Shape {
                expected: dim,
                got: row.len(),
            });
        }
        Ok(Slgr {
            n_classes,
            dim,
            weights: weights.concat(),
            bias,
            config,
            n_learned: 0,
        })
    }

    pub fn weights(&self, class: usize) -> &[f64] {
        &self.weights[class * self.dim..(class + 1) * self.dim]
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn config(&self) -> &SlgrConfig {
        &self.config
    }

    fn logits(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n_classes)
            .map(|c| {
                self.weights(c)
                    .iter()
                    .zip(x)
                    .map(|(w, v)| w * v)
                    .sum::<f64>()
                    + self.bias[c]
            })
            .collect()
    }

    /// Penalized cross-entropy of one example.
    pub fn loss(&self, x: &[f64], y: usize) -> Result<f64> {
        check_dim(self.dim, x)?;
        check_label(self.n_classes, y)?;
        let logits = self.logits(x);
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let log_sum = max + logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
        let penalty = 0.5 * self.config.lambda * self.weights.iter().map(|w| w * w).sum::<f64>();
        Ok(log_sum - logits[y] + penalty)
    }

    /// Gradient of [`loss`](Self::loss): `(dW row-major, db)`.
    pub fn gradient(&self, x: &[f64], y: usize) -> Result<(Vec<f64>, Vec<f64>)> {
        check_dim(self.dim, x)?;
        check_label(self.n_classes, y)?;
        let p = Prediction::softmax(&self.logits(x));
        let mut grad_w = vec![0.0; self.weights.len()];
        let mut grad_b = vec![0.0; self.n_classes];
        for c in 0..self.n_classes {
            let residual = p.probs()[c] - f64::from(u8::from(c == y));
            grad_b[c] = residual;
            let row = &mut grad_w[c * self.dim..(c + 1) * self.dim];
            for ((g, v), w) in row.iter_mut().zip(x).zip(self.weights(c)) {
                *g = residual * v + self.config.lambda * w;
            }
        }
        Ok((grad_w, grad_b))
    }
}

impl IncrementalClassifier for Slgr {
    fn name(&self) -> &'static str {
        "slgr"
    }

    fn n_classes(&self) -> usize {
        self.n_classes
    }

    fn predict(&self, x: &[f64]) -> Result<Prediction> {
        check_dim(self.dim, x)?;
        Ok(Prediction::softmax(&self.logits(x)))
    }

    fn learn(&mut self, x: &[f64], y: usize) -> Result<()> {
        let (grad_w, grad_b) = self.gradient(x, y)?;
        let eta = self.config.eta;
        let weights: Vec<f64> = self.weights.iter().zip(&grad_w).map(|(w, g)| w - eta * g).collect();
        let bias: Vec<f64> = self.bias.iter().zip(&grad_b).map(|(b, g)| b - eta * g).collect();
        if weights.iter().chain(&bias).any(|v| !v.is_finite()) {
            return Err(Error::TrainingDiverged);
        }
        self.weights = weights;
        self.bias = bias;
        self.n_learned += 1;
        Ok(())
    }

    fn n_learned(&self) -> u64 {
        self.n_learned
    }
}
