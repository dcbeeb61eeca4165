//! Synthetic embedding datasets: isotropic unit-variance Gaussian blobs with
//! class `c` centered at `c * separation` on axis `c`, optional uniform label
//! noise, and an abrupt-drift stream that cyclically permutes which center
//! each class is drawn from.

use rand::seq::{index, SliceRandom};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stage, SeededRng};
use crate::types::{ClassRegistry, Dataset, Instance};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlobSpec {
    pub n_per_class: Vec<usize>,
    pub dims: usize,
    pub separation: f64,
    pub noise_frac: f64,
    pub seed: u64,
}

impl Default for BlobSpec {
    fn default() -> Self {
        BlobSpec {
            n_per_class: vec![300, 150, 60],
            dims: 512,
            separation: 6.0,
            noise_frac: 0.05,
            seed: 0,
        }
    }
}

impl BlobSpec {
    /// The default benchmark without label noise.
    pub fn separable() -> Self {
        BlobSpec {
            noise_frac: 0.0,
            ..BlobSpec::default()
        }
    }

    pub fn n_classes(&self) -> usize {
        self.n_per_class.len()
    }

    pub fn len(&self) -> usize {
        self.n_per_class.iter().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn validate(&self) -> Result<()> {
        let c = self.n_classes();
        if c < 2 {
            return Err(Error::Spec("at least two classes are required".into()));
        }
        if self.dims == 0 {
            return Err(Error::Spec("dims must be >= 1".into()));
        }
        if c > self.dims {
            return Err(Error::Spec(format!("{c} classes need at least {c} dims, got {}", self.dims)));
        }
        if !(self.separation >= 0.0) || !self.separation.is_finite() {
            return Err(Error::Spec(format!("separation must be >= 0, got {}", self.separation)));
        }
        if !(0.0..1.0).contains(&self.noise_frac) {
            return Err(Error::Spec(format!("noise_frac must lie in [0,1), got {}", self.noise_frac)));
        }
        Ok(())
    }

    pub fn center(&self, class: usize) -> Vec<f64> {
        let mut c = vec![0.0; self.dims];
        c[class] = class as f64 * self.separation;
        c
    }

    /// Number of labels reassigned by noise.
    pub fn n_flips(&self) -> usize {
        (self.noise_frac * self.len() as f64).round() as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftSpec {
    pub blobs: BlobSpec,
    /// First stream index drawn from the permuted centers.
    pub drift_step: usize,
}

impl DriftSpec {
    /// Imbalanced three-class stream with the rotation at its midpoint.
    pub fn benchmark(seed: u64) -> Self {
        let blobs = BlobSpec {
            n_per_class: vec![1200, 240, 600],
            dims: 8,
            separation: 6.0,
            noise_frac: 0.0,
            seed,
        };
        let drift_step = blobs.len() / 2;
        DriftSpec { blobs, drift_step }
    }

    pub fn validate(&self) -> Result<()> {
        self.blobs.validate()?;
        if self.drift_step == 0 || self.drift_step > self.blobs.len() {
            return Err(Error::Spec(format!(
                "drift_step must lie in 1..={}, got {}",
                self.blobs.len(),
                self.drift_step
            )));
        }
        Ok(())
    }
}

pub fn class_names(n_classes: usize) -> Vec<String> {
    (0..n_classes).map(|c| format!("class{c}")).collect()
}

fn generate(spec: &BlobSpec, drift_step: Option<usize>) -> Result<Dataset> {
    spec.validate()?;
    let n_classes = spec.n_classes();
    let mut rng = SeededRng::for_path(spec.seed, &[stage::DATAGEN]);

    let mut labels: Vec<usize> = spec
        .n_per_class
        .iter()
        .enumerate()
        .flat_map(|(c, &n)| std::iter::repeat_n(c, n))
        .collect();
    labels.shuffle(&mut rng);

    let centers: Vec<Vec<f64>> = (0..n_classes).map(|c| spec.center(c)).collect();
    let mut instances: Vec<Instance> = labels
        .iter()
        .enumerate()
        .map(|(i, &y)| {
            let source = match drift_step {
                Some(step) if i >= step => (y + 1) % n_classes,
                _ => y,
            };
            let features = centers[source]
                .iter()
                .map(|&mu| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    mu + z
                })
                .collect();
            Instance::new(format!("s{i:06}"), features, Some(y))
        })
        .collect();

    let n = instances.len();
    let flips = spec.n_flips().min(n);
    for i in index::sample(&mut rng, n, flips) {
        let old = instances[i].label.expect("generated instances are labeled");
        let shift = rng.random_range(1..n_classes);
        instances[i].label = Some((old + shift) % n_classes);
    }

    Dataset::new(instances, ClassRegistry::new(class_names(n_classes))?)
}

/// Labeled blob instances in a seeded random order.
pub fn gen_blobs(spec: &BlobSpec) -> Result<Dataset> {
    generate(spec, None)
}

/// Ordered stream whose class-to-center mapping rotates at `drift_step`.
pub fn gen_drift_stream(spec: &DriftSpec) -> Result<Dataset> {
    spec.validate()?;
    generate(&spec.blobs, Some(spec.drift_step))
}
