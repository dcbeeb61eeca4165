//! Flat `key = value` run configuration with `#` comments.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::active::{QueryMode, UncertaintyKind};
use crate::datagen::BlobSpec;
use crate::error::{Error, Result};
use crate::eval::ExperimentConfig;
use crate::learners::LearnerKind;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub experiment: ExperimentConfig,
    /// Embeddings CSV; when absent the generator spec is used.
    pub dataset: Option<PathBuf>,
    pub generator: BlobSpec,
    /// Only used by `gen`: write a drift stream rotating at this index.
    pub drift_step: Option<usize>,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            experiment: ExperimentConfig::default(),
            dataset: None,
            generator: BlobSpec::default(),
            drift_step: None,
            out: PathBuf::from("out"),
        }
    }
}

fn num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse {value:?}")))
}

fn list<T: FromStr<Err = Error>>(value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(T::from_str)
        .collect()
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        // Relative dataset paths are resolved against the config file.
        if let (Some(ds), Some(dir)) = (&cfg.dataset, path.parent()) {
            if ds.is_relative() {
                cfg.dataset = Some(dir.join(ds));
            }
        }
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut seen = std::collections::HashSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", i + 1)))?;
            let key = key.trim();
            if !seen.insert(key.to_string()) {
                return Err(Error::Config(format!("line {}: duplicate key {key}", i + 1)));
            }
            cfg.set(key, value.trim())
                .map_err(|e| Error::Config(format!("line {}: {}", i + 1, strip_prefix(&e))))?;
        }
        Ok(cfg)
    }

    /// Applies one override.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let e = &mut self.experiment;
        let p = &mut e.params;
        match key {
            "dataset" => self.dataset = Some(PathBuf::from(value)),
            "out" => self.out = PathBuf::from(value),
            "generator.n_per_class" => self.generator.n_per_class = value.split(',').map(|v| num(key, v.trim())).collect::<Result<_>>()?,
            "generator.dims" => self.generator.dims = num(key, value)?,
            "generator.separation" => self.generator.separation = num(key, value)?,
            "generator.noise_frac" => self.generator.noise_frac = num(key, value)?,
            "generator.seed" => self.generator.seed = num(key, value)?,
            "generator.drift_step" => self.drift_step = Some(num(key, value)?),
            "learners" => e.learners = list::<LearnerKind>(value)?,
            "scenarios" => e.scenarios = list::<QueryMode>(value)?,
            "threshold" => e.threshold = num(key, value)?,
            "uncertainty" => e.uncertainty = value.parse::<UncertaintyKind>()?,
            "k_folds" => e.k_folds = num(key, value)?,
            "repeats" => e.repeats = num(key, value)?,
            "train_frac" => e.train_frac = num(key, value)?,
            "eval_every" => e.eval_every = num(key, value)?,
            "seed" => e.seed = num(key, value)?,
            "ci_over" => e.ci_over = value.parse()?,
            "jobs" => e.jobs = num(key, value)?,
            "slgr.eta" => p.slgr.eta = num(key, value)?,
            "slgr.lambda" => p.slgr.lambda = num(key, value)?,
            "sknn.window" => p.sknn.window = num(key, value)?,
            "sknn.k" => p.sknn.k = num(key, value)?,
            "ht.grace_period" => p.ht.grace_period = num(key, value)?,
            "ht.delta" => p.ht.delta = num(key, value)?,
            "ht.tau" => p.ht.tau = num(key, value)?,
            "ht.n_thresholds" => p.ht.n_thresholds = num(key, value)?,
            "hat.adwin_delta" => p.hat_adwin_delta = num(key, value)?,
            "sgt.lambda" => p.sgt.lambda = num(key, value)?,
            "sgt.alpha" => p.sgt.alpha = num(key, value)?,
            "sgt.grace_period" => p.sgt.grace_period = num(key, value)?,
            "sgt.n_thresholds" => p.sgt.n_thresholds = num(key, value)?,
            "sgt.warmup" => p.sgt.warmup = num(key, value)?,
            "sgt.min_child" => p.sgt.min_child = num(key, value)?,
            other => return Err(Error::Config(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    /// Range checks that do not depend on the data.
    pub fn validate(&self) -> Result<()> {
        self.experiment.validate()?;
        if self.dataset.is_none() {
            self.generator.validate().map_err(|e| Error::Config(strip_prefix(&e)))?;
        }
        let p = &self.experiment.params;
        let unit = |name: &str, v: f64| {
            if v > 0.0 && v < 1.0 {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must lie in (0,1), got {v}")))
            }
        };
        let positive = |name: &str, ok: bool| {
            if ok {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} out of range")))
            }
        };
        positive("slgr.eta", p.slgr.eta > 0.0 && p.slgr.eta.is_finite())?;
        positive("slgr.lambda", p.slgr.lambda >= 0.0 && p.slgr.lambda.is_finite())?;
        positive("sknn.window", p.sknn.window >= 1)?;
        positive("sknn.k", p.sknn.k >= 1)?;
        positive("ht.grace_period", p.ht.grace_period >= 1)?;
        unit("ht.delta", p.ht.delta)?;
        positive("ht.tau", p.ht.tau >= 0.0)?;
        positive("ht.n_thresholds", p.ht.n_thresholds >= 1)?;
        unit("hat.adwin_delta", p.hat_adwin_delta)?;
        positive("sgt.lambda", p.sgt.lambda >= 0.0 && p.sgt.lambda.is_finite())?;
        unit("sgt.alpha", p.sgt.alpha)?;
        positive("sgt.grace_period", p.sgt.grace_period >= 1)?;
        positive("sgt.n_thresholds", p.sgt.n_thresholds >= 1)?;
        Ok(())
    }
}

fn strip_prefix(e: &Error) -> String {
    match e {
        Error::Config(m) | Error::Spec(m) => m.clone(),
        other => other.to_string(),
    }
}
