//! Domain values shared by every module: class labels, instances and
//! per-class probability vectors.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sum-to-one tolerance for [`Prediction`].
pub const PROB_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ClassLabel {
    pub index: usize,
    pub name: String,
}

/// Ordered set of class names; a name's position is its class index.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ClassRegistry {
    names: Vec<String>,
}

impl ClassRegistry {
    pub fn new<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Result<Self> {
        let mut registry = ClassRegistry::default();
        for name in names {
            let name = name.into();
            if registry.index_of(&name).is_some() {
                return Err(Error::Spec(format!("duplicate class name {name:?}")));
            }
            registry.names.push(name);
        }
        Ok(registry)
    }

    /// Index of `name`, registering it if unseen.
    pub fn intern(&mut self, name: &str) -> usize {
        match self.index_of(name) {
            Some(i) => i,
            None => {
                self.names.push(name.to_string());
                self.names.len() - 1
            }
        }
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn label(&self, index: usize) -> Option<ClassLabel> {
        self.names.get(index).map(|name| ClassLabel {
            index,
            name: name.clone(),
        })
    }

    pub fn name(&self, index: usize) -> Option<&str> {
        self.names.get(index).map(String::as_str)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

/// One element of a stream: an embedding with an optional class index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub id: String,
    pub features: Vec<f64>,
    pub label: Option<usize>,
}

impl Instance {
    pub fn new(id: impl Into<String>, features: Vec<f64>, label: Option<usize>) -> Self {
        Instance {
            id: id.into(),
            features,
            label,
        }
    }

    pub fn dim(&self) -> usize {
        self.features.len()
    }
}

/// A labeled collection of instances with a constant feature dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub instances: Vec<Instance>,
    pub classes: ClassRegistry,
}

impl Dataset {
    pub fn new(instances: Vec<Instance>, classes: ClassRegistry) -> Result<Self> {
        if let Some(first) = instances.first() {
            let dim = first.dim();
            for inst in &instances {
                if inst.dim() != dim {
                    return Err(Error::Shape {
                        expected: dim,
                        got: inst.dim(),
                    });
                }
                if inst.features.iter().any(|v| !v.is_finite()) {
                    return Err(Error::DataIntegrity(format!(
                        "instance {} has non-finite features",
                        inst.id
                    )));
                }
                if let Some(y) = inst.label {
                    if y >= classes.len() {
                        return Err(Error::DataIntegrity(format!(
                            "instance {} has label {y} outside {} classes",
                            inst.id,
                            classes.len()
                        )));
                    }
                }
            }
        }
        Ok(Dataset { instances, classes })
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.instances.first().map_or(0, Instance::dim)
    }

    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    /// Labels of every instance; fails if any instance is unlabeled.
    pub fn labels(&self) -> Result<Vec<usize>> {
        self.instances
            .iter()
            .map(|inst| {
                inst.label
                    .ok_or_else(|| Error::DataIntegrity(format!("instance {} is unlabeled", inst.id)))
            })
            .collect()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes()];
        for y in self.instances.iter().filter_map(|i| i.label) {
            counts[y] += 1;
        }
        counts
    }
}

/// Probability distribution over classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    probs: Vec<f64>,
}

impl Prediction {
    /// Wraps an already-normalized vector, validating it.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidPrediction("empty probability vector".into()));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0 || *p > 1.0) {
            return Err(Error::InvalidPrediction(format!("entry outside [0,1]: {probs:?}")));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > PROB_SUM_TOL {
            return Err(Error::InvalidPrediction(format!("entries sum to {sum}")));
        }
        Ok(Prediction { probs })
    }

    pub fn uniform(n_classes: usize) -> Self {
        Prediction {
            probs: vec![1.0 / n_classes as f64; n_classes],
        }
    }

    /// Softmax of raw logits, shifted by the maximum for overflow safety.
    pub fn softmax(logits: &[f64]) -> Self {
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
        let sum: f64 = exps.iter().sum();
        Prediction {
            probs: exps.into_iter().map(|e| e / sum).collect(),
        }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn n_classes(&self) -> usize {
        self.probs.len()
    }

    pub fn max_prob(&self) -> f64 {
        self.probs.iter().copied().fold(0.0, f64::max)
    }
}

/// Scales non-negative scores to a distribution. All-zero input maps to uniform.
pub fn normalize(scores: &[f64]) -> Result<Prediction> {
    if scores.is_empty() {
        return Err(Error::InvalidPrediction("empty score vector".into()));
    }
    for (index, &value) in scores.iter().enumerate() {
        if !value.is_finite() || value < 0.0 {
            return Err(Error::InvalidScore { index, value });
        }
    }
    let sum: f64 = scores.iter().sum();
    if sum == 0.0 {
        return Ok(Prediction::uniform(scores.len()));
    }
    Ok(Prediction {
        probs: scores.iter().map(|s| s / sum).collect(),
    })
}

/// Index of the most probable class, lowest index on ties.
pub fn argmax_class(p: &Prediction) -> usize {
    argmax(p.probs())
}

pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn close(a: &[f64], b: &[f64]) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-12);
        }
    }

    #[test]
    fn normalize_examples() {
        close(normalize(&[2.0, 1.0, 1.0]).unwrap().probs(), &[0.5, 0.25, 0.25]);
        close(normalize(&[0.0, 0.0, 0.0]).unwrap().probs(), &[1.0 / 3.0; 3]);
        close(normalize(&[5.0, 0.0, 0.0]).unwrap().probs(), &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn normalize_rejects_bad_scores() {
        assert_eq!(
            normalize(&[1.0, -0.5]),
            Err(Error::InvalidScore { index: 1, value: -0.5 })
        );
        assert!(matches!(
            normalize(&[f64::NAN, 1.0]),
            Err(Error::InvalidScore { index: 0, .. })
        ));
        assert!(normalize(&[f64::INFINITY]).is_err());
    }

    #[test]
    fn argmax_examples() {
        let p = |v: &[f64]| Prediction::new(v.to_vec()).unwrap();
        assert_eq!(argmax_class(&p(&[0.2, 0.5, 0.3])), 1);
        assert_eq!(argmax_class(&p(&[0.4, 0.4, 0.2])), 0);
        assert_eq!(argmax_class(&p(&[1.0, 0.0, 0.0])), 0);
    }

    #[test]
    fn prediction_validation() {
        assert!(Prediction::new(vec![0.5, 0.6]).is_err());
        assert!(Prediction::new(vec![1.2, -0.2]).is_err());
        assert!(Prediction::new(vec![]).is_err());
        let p = Prediction::softmax(&[1000.0, 0.0]);
        assert!(Prediction::new(p.probs().to_vec()).is_ok());
    }

    #[test]
    fn registry_interns_by_first_appearance() {
        let mut reg = ClassRegistry::default();
        assert_eq!(reg.intern("good"), 0);
        assert_eq!(reg.intern("double_print"), 1);
        assert_eq!(reg.intern("good"), 0);
        assert_eq!(reg.label(1).unwrap().name, "double_print");
        assert!(ClassRegistry::new(["a", "a"]).is_err());
    }

    proptest! {
        #[test]
        fn normalize_is_idempotent(scores in prop::collection::vec(0.0f64..1e6, 1..8)) {
            let once = normalize(&scores).unwrap();
            let twice = normalize(once.probs()).unwrap();
            for (a, b) in once.probs().iter().zip(twice.probs()) {
                prop_assert!((a - b).abs() <= 1e-12);
            }
            let sum: f64 = once.probs().iter().sum();
            prop_assert!((sum - 1.0).abs() <= PROB_SUM_TOL);
        }

        #[test]
        fn argmax_is_scale_invariant(
            scores in prop::collection::vec(0.0f64..1e3, 1..8),
            scale in 1e-3f64..1e3,
        ) {
            let scaled: Vec<f64> = scores.iter().map(|s| s * scale).collect();
            prop_assert_eq!(
                argmax_class(&normalize(&scores).unwrap()),
                argmax_class(&normalize(&scaled).unwrap())
            );
        }
    }
}
