//! The incremental-classifier contract and the two non-tree learners.

mod registry;
mod sknn;
mod slgr;

pub use registry::{build, LearnerKind, LearnerParams};
pub use sknn::{Sknn, SknnConfig};
pub use slgr::{Slgr, SlgrConfig};

use crate::error::{Error, Result};
use crate::types::Prediction;

/// A classifier that predicts and learns one instance at a time.
///
/// `predict` never mutates state; every successful `learn` increments
/// [`n_learned`](IncrementalClassifier::n_learned) by exactly one.
pub trait IncrementalClassifier: Send {
    fn name(&self) -> &'static str;

    fn n_classes(&self) -> usize;

    fn predict(&self, x: &[f64]) -> Result<Prediction>;

    fn learn(&mut self, x: &[f64], y: usize) -> Result<()>;

    fn n_learned(&self) -> u64;
}

pub(crate) fn check_dim(expected: usize, x: &[f64]) -> Result<()> {
    if x.len() != expected {
        return Err(Error::Shape {
            expected,
            got: x.len(),
        });
    }
    Ok(())
}

pub(crate) fn check_label(n_classes: usize, y: usize) -> Result<()> {
    if y >= n_classes {
        return Err(Error::DataIntegrity(format!(
            "label {y} outside {n_classes} classes"
        )));
    }
    Ok(())
}
