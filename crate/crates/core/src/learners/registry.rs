use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{IncrementalClassifier, Sknn, SknnConfig, Slgr, SlgrConfig};
use crate::error::{Error, Result};
use crate::trees::adwin::DEFAULT_ADWIN_DELTA;
use crate::trees::{HoeffdingTree, HtConfig, Sgt, SgtConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LearnerKind {
    Slgr,
    Sknn,
    Sgt,
    Ht,
    Hat,
}

impl LearnerKind {
    pub const ALL: [LearnerKind; 5] = [
        LearnerKind::Slgr,
        LearnerKind::Sknn,
        LearnerKind::Sgt,
        LearnerKind::Ht,
        LearnerKind::Hat,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            LearnerKind::Slgr => "slgr",
            LearnerKind::Sknn => "sknn",
            LearnerKind::Sgt => "sgt",
            LearnerKind::Ht => "ht",
            LearnerKind::Hat => "hat",
        }
    }
}

impl fmt::Display for LearnerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LearnerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        LearnerKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| {
                let known: Vec<&str> = LearnerKind::ALL.iter().map(LearnerKind::as_str).collect();
                Error::Config(format!("unknown learner {s:?} (known: {})", known.join(", ")))
            })
    }
}

/// Hyperparameters for every learner the registry can build.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerParams {
    pub slgr: SlgrConfig,
    pub sknn: SknnConfig,
    pub ht: HtConfig,
    pub hat_adwin_delta: f64,
    pub sgt: SgtConfig,
}

impl Default for LearnerParams {
    fn default() -> Self {
        LearnerParams {
            slgr: SlgrConfig::default(),
            sknn: SknnConfig::default(),
            ht: HtConfig::default(),
            hat_adwin_delta: DEFAULT_ADWIN_DELTA,
            sgt: SgtConfig::default(),
        }
    }
}

pub fn build(
    kind: LearnerKind,
    n_classes: usize,
    dim: usize,
    params: &LearnerParams,
) -> Result<Box<dyn IncrementalClassifier>> {
    if n_classes < 2 {
        return Err(Error::Config(format!("need at least 2 classes, got {n_classes}")));
    }
    if dim == 0 {
        return Err(Error::Config("feature dimension must be >= 1".into()));
    }
    Ok(match kind {
        LearnerKind::Slgr => Box::new(Slgr::new(n_classes, dim, params.slgr)),
        LearnerKind::Sknn => Box::new(Sknn::new(n_classes, dim, params.sknn)?),
        LearnerKind::Sgt => Box::new(Sgt::new(n_classes, dim, params.sgt)),
        LearnerKind::Ht => Box::new(HoeffdingTree::new(n_classes, dim, params.ht)),
        LearnerKind::Hat => Box::new(HoeffdingTree::adaptive(
            n_classes,
            dim,
            params.ht,
            params.hat_adwin_delta,
        )?),
    })
}
