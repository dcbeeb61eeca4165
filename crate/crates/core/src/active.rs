//! Uncertainty sampling over a stream: predict, decide whether to ask the
//! oracle, learn from the answer, score the test set.

use std::collections::HashMap;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learners::IncrementalClassifier;
use crate::types::{Instance, Prediction};

pub const DEFAULT_THRESHOLD: f64 = 0.55;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueryMode {
    /// Query every instance.
    NoAl,
    /// Query only instances whose uncertainty exceeds the threshold.
    Al,
}

impl QueryMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            QueryMode::NoAl => "no_al",
            QueryMode::Al => "al",
        }
    }
}

impl FromStr for QueryMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "no_al" => Ok(QueryMode::NoAl),
            "al" => Ok(QueryMode::Al),
            other => Err(Error::Config(format!("unknown scenario {other:?} (expected no_al, al)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UncertaintyKind {
    /// `1 - max p`
    #[default]
    LeastConfidence,
    /// `1 - (p_first - p_second)`
    Margin,
    /// Shannon entropy divided by `ln C`.
    Entropy,
}

impl UncertaintyKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            UncertaintyKind::LeastConfidence => "least_confidence",
            UncertaintyKind::Margin => "margin",
            UncertaintyKind::Entropy => "entropy",
        }
    }
}

impl FromStr for UncertaintyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "least_confidence" => Ok(UncertaintyKind::LeastConfidence),
            "margin" => Ok(UncertaintyKind::Margin),
            "entropy" => Ok(UncertaintyKind::Entropy),
            other => Err(Error::Config(format!(
                "unknown uncertainty {other:?} (expected least_confidence, margin, entropy)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QueryPolicy {
    pub mode: QueryMode,
    pub threshold: f64,
    pub kind: UncertaintyKind,
}

impl QueryPolicy {
    pub fn no_al() -> Self {
        QueryPolicy {
            mode: QueryMode::NoAl,
            threshold: DEFAULT_THRESHOLD,
            kind: UncertaintyKind::LeastConfidence,
        }
    }

    pub fn al(threshold: f64) -> Self {
        QueryPolicy {
            mode: QueryMode::Al,
            threshold,
            kind: UncertaintyKind::LeastConfidence,
        }
    }
}

/// Least-confidence uncertainty `1 - max_c p_c`.
pub fn uncertainty(p: &Prediction) -> f64 {
    1.0 - p.max_prob()
}

pub fn uncertainty_of(kind: UncertaintyKind, p: &Prediction) -> f64 {
    match kind {
        UncertaintyKind::LeastConfidence => uncertainty(p),
        UncertaintyKind::Margin => {
            let mut sorted = p.probs().to_vec();
            sorted.sort_by(|a, b| b.total_cmp(a));
            1.0 - (sorted[0] - sorted.get(1).copied().unwrap_or(0.0))
        }
        UncertaintyKind::Entropy => {
            let c = p.n_classes();
            if c < 2 {
                return 0.0;
            }
            let h: f64 = p.probs().iter().filter(|&&q| q > 0.0).map(|&q| -q * q.ln()).sum();
            h / (c as f64).ln()
        }
    }
}

pub fn should_query(policy: &QueryPolicy, p: &Prediction) -> bool {
    match policy.mode {
        QueryMode::NoAl => true,
        QueryMode::Al => uncertainty_of(policy.kind, p) > policy.threshold,
    }
}

/// Simulated annotator answering from held-out ground truth.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct OracleSim {
    labels: HashMap<String, usize>,
}

impl OracleSim {
    pub fn new(labels: HashMap<String, usize>) -> Self {
        OracleSim { labels }
    }

    pub fn from_instances<'a>(instances: impl IntoIterator<Item = &'a Instance>) -> Self {
        OracleSim {
            labels: instances
                .into_iter()
                .filter_map(|i| i.label.map(|y| (i.id.clone(), y)))
                .collect(),
        }
    }

    pub fn label(&self, id: &str) -> Result<usize> {
        self.labels
            .get(id)
            .copied()
            .ok_or_else(|| Error::DataIntegrity(format!("oracle has no label for instance {id}")))
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Scores a learner on held-out data.
pub trait Evaluator {
    fn score(&self, learner: &dyn IncrementalClassifier) -> Result<f64>;
}

impl<F> Evaluator for F
where
    F: Fn(&dyn IncrementalClassifier) -> Result<f64>,
{
    fn score(&self, learner: &dyn IncrementalClassifier) -> Result<f64> {
        self(learner)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlRecord {
    pub step: usize,
    pub prediction: Prediction,
    pub uncertainty: f64,
    pub queried: bool,
    /// Test-set score after this step; `None` on steps skipped by `eval_every`.
    pub test_auc_after: Option<f64>,
}

/// Runs the test-then-maybe-train loop over the whole stream.
pub fn run_stream(
    learner: &mut dyn IncrementalClassifier,
    stream: &[Instance],
    oracle: &OracleSim,
    policy: &QueryPolicy,
    evaluator: &dyn Evaluator,
    eval_every: usize,
) -> Result<Vec<AlRecord>> {
    if stream.is_empty() {
        return Err(Error::InsufficientData("stream is empty".into()));
    }
    let eval_every = eval_every.max(1);
    let mut records = Vec::with_capacity(stream.len());
    for (step, inst) in stream.iter().enumerate() {
        let prediction = learner.predict(&inst.features)?;
        let u = uncertainty_of(policy.kind, &prediction);
        let queried = should_query(policy, &prediction);
        if queried {
            let y = oracle.label(&inst.id)?;
            learner.learn(&inst.features, y)?;
        }
        let evaluate = (step + 1) % eval_every == 0 || step + 1 == stream.len();
        let test_auc_after = if evaluate {
            Some(evaluator.score(learner)?)
        } else {
            None
        };
        records.push(AlRecord {
            step,
            prediction,
            uncertainty: u,
            queried,
            test_auc_after,
        });
    }
    Ok(records)
}

/// Percentage of stream instances never shown to the oracle.
pub fn effort_gain(records: &[AlRecord]) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::InsufficientData("effort gain of an empty run".into()));
    }
    let skipped = records.iter().filter(|r| !r.queried).count();
    Ok(100.0 * skipped as f64 / records.len() as f64)
}
