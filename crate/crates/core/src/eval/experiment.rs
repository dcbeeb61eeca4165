//! Repeated stratified cross-validation around the active-learning stream.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cv::{partition_train_stream, stratified_kfold};
use super::metrics::{auc_ovr_weighted, describe, mean_ci, timeline_quartile_means, Distribution, MeanCi};
use crate::active::{effort_gain, run_stream, Evaluator, OracleSim, QueryMode, QueryPolicy, UncertaintyKind, DEFAULT_THRESHOLD};
use crate::error::{Error, Result};
use crate::features::{apply_mask, select_top_k, SelectionMask};
use crate::learners::{build, IncrementalClassifier, LearnerKind, LearnerParams};
use crate::rng::{stage, SeededRng};
use crate::types::{Dataset, Instance};

/// Population over which confidence intervals are computed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CiOver {
    /// Every (repeat, fold) cell.
    #[default]
    Cells,
    /// Per-repeat means over folds.
    RepeatMeans,
}

impl std::str::FromStr for CiOver {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "cells" => Ok(CiOver::Cells),
            "repeat_means" => Ok(CiOver::RepeatMeans),
            other => Err(Error::Config(format!("unknown ci_over {other:?} (expected cells, repeat_means)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub learners: Vec<LearnerKind>,
    pub scenarios: Vec<QueryMode>,
    pub threshold: f64,
    pub uncertainty: UncertaintyKind,
    pub k_folds: usize,
    pub repeats: usize,
    pub train_frac: f64,
    pub eval_every: usize,
    pub seed: u64,
    pub params: LearnerParams,
    pub ci_over: CiOver,
    /// Worker threads; 0 uses every core.
    #[serde(skip)]
    pub jobs: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            learners: LearnerKind::ALL.to_vec(),
            scenarios: vec![QueryMode::NoAl, QueryMode::Al],
            threshold: DEFAULT_THRESHOLD,
            uncertainty: UncertaintyKind::default(),
            k_folds: 10,
            repeats: 10,
            train_frac: 0.2,
            eval_every: 1,
            seed: 0,
            params: LearnerParams::default(),
            ci_over: CiOver::default(),
            jobs: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.learners.is_empty() {
            return Err(Error::Config("no learners selected".into()));
        }
        if self.scenarios.is_empty() {
            return Err(Error::Config("no scenarios selected".into()));
        }
        if self.k_folds < 2 {
            return Err(Error::Config(format!("k_folds must be >= 2, got {}", self.k_folds)));
        }
        if self.repeats == 0 {
            return Err(Error::Config("repeats must be >= 1".into()));
        }
        if !(self.train_frac > 0.0 && self.train_frac < 1.0) {
            return Err(Error::Config(format!("train_frac must lie in (0,1), got {}", self.train_frac)));
        }
        if self.eval_every == 0 {
            return Err(Error::Config("eval_every must be >= 1".into()));
        }
        if !self.threshold.is_finite() {
            return Err(Error::Config("threshold must be finite".into()));
        }
        Ok(())
    }

    fn policy(&self, mode: QueryMode) -> QueryPolicy {
        QueryPolicy {
            mode,
            threshold: self.threshold,
            kind: self.uncertainty,
        }
    }
}

/// Weighted OvR AUC of a learner's predictions on a fixed labeled set.
pub struct TestSetScorer {
    features: Vec<Vec<f64>>,
    labels: Vec<usize>,
}

impl TestSetScorer {
    pub fn new(instances: &[Instance]) -> Result<Self> {
        let labels = instances
            .iter()
            .map(|i| i.label.ok_or_else(|| Error::DataIntegrity(format!("test instance {} is unlabeled", i.id))))
            .collect::<Result<Vec<_>>>()?;
        Ok(TestSetScorer {
            features: instances.iter().map(|i| i.features.clone()).collect(),
            labels,
        })
    }
}

impl Evaluator for TestSetScorer {
    fn score(&self, learner: &dyn IncrementalClassifier) -> Result<f64> {
        let probs = self
            .features
            .iter()
            .map(|x| learner.predict(x).map(|p| p.probs().to_vec()))
            .collect::<Result<Vec<_>>>()?;
        auc_ovr_weighted(&probs, &self.labels)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub uncertainty: f64,
    pub queried: bool,
    pub auc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub learner: LearnerKind,
    pub scenario: QueryMode,
    pub repeat: usize,
    pub fold: usize,
    pub n_train: usize,
    pub n_stream: usize,
    pub n_test: usize,
    pub selected_features: Vec<usize>,
    /// Test AUC after the initial training pass, before the stream.
    pub initial_auc: f64,
    pub final_auc: f64,
    /// Mean over evaluated stream steps.
    pub mean_auc: f64,
    pub quartile_means: [f64; 4],
    pub effort_gain: f64,
    pub n_queried: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub learner: LearnerKind,
    pub scenario: QueryMode,
    pub repeat: usize,
    pub fold: usize,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellRun {
    pub result: CellResult,
    pub records: Vec<StepRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub learner: LearnerKind,
    pub scenario: QueryMode,
    pub n_cells: usize,
    pub mean_auc: MeanCi,
    pub final_auc: MeanCi,
    pub q1_auc: MeanCi,
    pub q4_auc: MeanCi,
    pub effort_gain: Distribution,
    /// Per-step test AUC averaged over cells that reached the step.
    pub timeline: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSummary {
    pub scenario: QueryMode,
    pub n_cells: usize,
    pub mean_auc: MeanCi,
    pub q1_auc: MeanCi,
    pub q4_auc: MeanCi,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetInfo {
    pub n_instances: usize,
    pub dim: usize,
    pub classes: Vec<String>,
    pub class_counts: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: ExperimentConfig,
    pub dataset: DatasetInfo,
    pub groups: Vec<GroupSummary>,
    pub scenarios: Vec<ScenarioSummary>,
    pub cells: Vec<CellResult>,
    pub incomplete: Vec<CellFailure>,
    pub warnings: Vec<String>,
}

impl RunReport {
    pub fn group(&self, learner: LearnerKind, scenario: QueryMode) -> Option<&GroupSummary> {
        self.groups
            .iter()
            .find(|g| g.learner == learner && g.scenario == scenario)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutcome {
    pub report: RunReport,
    /// Successful cells with their per-step records, in canonical order.
    pub runs: Vec<CellRun>,
}

struct UnitOutput {
    runs: Vec<std::result::Result<CellRun, CellFailure>>,
    warnings: Vec<String>,
}

/// Runs every (repeat, fold, learner, scenario) cell and aggregates.
pub fn run_experiment(config: &ExperimentConfig, dataset: &Dataset) -> Result<ExperimentOutcome> {
    config.validate()?;
    let labels = dataset.labels()?;
    if dataset.n_classes() < 2 {
        return Err(Error::InsufficientData("dataset has fewer than two classes".into()));
    }

    let mut plans = Vec::with_capacity(config.repeats);
    for r in 0..config.repeats {
        let mut rng = SeededRng::for_path(config.seed, &[stage::FOLDS, r as u64]);
        plans.push(stratified_kfold(&labels, config.k_folds, &mut rng)?);
    }
    let units: Vec<(usize, usize)> = (0..config.repeats)
        .flat_map(|r| (0..config.k_folds).map(move |f| (r, f)))
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let outputs: Vec<UnitOutput> = pool.install(|| {
        units
            .par_iter()
            .map(|&(r, f)| run_unit(config, dataset, &labels, &plans[r], r, f))
            .collect()
    });

    let mut runs = Vec::new();
    let mut incomplete = Vec::new();
    let mut warnings = Vec::new();
    for out in outputs {
        warnings.extend(out.warnings);
        for run in out.runs {
            match run {
                Ok(run) => runs.push(run),
                Err(failure) => incomplete.push(failure),
            }
        }
    }
    let key = |l: LearnerKind, s: QueryMode, r: usize, f: usize| {
        let li = config.learners.iter().position(|&x| x == l).unwrap_or(usize::MAX);
        let si = config.scenarios.iter().position(|&x| x == s).unwrap_or(usize::MAX);
        (li, si, r, f)
    };
    runs.sort_by_key(|c| key(c.result.learner, c.result.scenario, c.result.repeat, c.result.fold));
    incomplete.sort_by_key(|c| key(c.learner, c.scenario, c.repeat, c.fold));

    let mut groups = Vec::new();
    for &learner in &config.learners {
        for &scenario in &config.scenarios {
            let cells: Vec<&CellRun> = runs
                .iter()
                .filter(|c| c.result.learner == learner && c.result.scenario == scenario)
                .collect();
            if cells.is_empty() {
                warnings.push(format!("{learner}/{}: no completed cells", scenario.as_str()));
                continue;
            }
            groups.push(summarize_group(config, learner, scenario, &cells)?);
        }
    }
    let mut scenarios = Vec::new();
    for &scenario in &config.scenarios {
        let cells: Vec<&CellRun> = runs.iter().filter(|c| c.result.scenario == scenario).collect();
        if cells.is_empty() {
            continue;
        }
        let results: Vec<&CellResult> = cells.iter().map(|c| &c.result).collect();
        scenarios.push(ScenarioSummary {
            scenario,
            n_cells: cells.len(),
            mean_auc: ci_of(config.ci_over, &results, |c| c.mean_auc)?,
            q1_auc: ci_of(config.ci_over, &results, |c| c.quartile_means[0])?,
            q4_auc: ci_of(config.ci_over, &results, |c| c.quartile_means[3])?,
        });
    }

    let report = RunReport {
        config: config.clone(),
        dataset: DatasetInfo {
            n_instances: dataset.len(),
            dim: dataset.dim(),
            classes: dataset.classes.names().to_vec(),
            class_counts: dataset.class_counts(),
        },
        groups,
        scenarios,
        cells: runs.iter().map(|c| c.result.clone()).collect(),
        incomplete,
        warnings,
    };
    Ok(ExperimentOutcome { report, runs })
}

fn ci_of(over: CiOver, cells: &[&CellResult], value: impl Fn(&CellResult) -> f64) -> Result<MeanCi> {
    let values: Vec<f64> = match over {
        CiOver::Cells => cells.iter().map(|c| value(c)).collect(),
        CiOver::RepeatMeans => {
            let mut by_repeat: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
            for c in cells {
                let e = by_repeat.entry(c.repeat).or_default();
                e.0 += value(c);
                e.1 += 1;
            }
            by_repeat.values().map(|(s, n)| s / *n as f64).collect()
        }
    };
    if values.len() == 1 {
        return Ok(MeanCi {
            mean: values[0],
            half_width: 0.0,
            n: 1,
        });
    }
    mean_ci(&values)
}

fn summarize_group(config: &ExperimentConfig, learner: LearnerKind, scenario: QueryMode, cells: &[&CellRun]) -> Result<GroupSummary> {
    let results: Vec<&CellResult> = cells.iter().map(|c| &c.result).collect();
    let gains: Vec<f64> = results.iter().map(|c| c.effort_gain).collect();
    let max_len = cells.iter().map(|c| c.records.len()).max().unwrap_or(0);
    let mut sums = vec![(0.0, 0usize); max_len];
    for c in cells {
        for rec in &c.records {
            if let Some(a) = rec.auc {
                sums[rec.step].0 += a;
                sums[rec.step].1 += 1;
            }
        }
    }
    let timeline = sums
        .into_iter()
        .filter(|(_, n)| *n > 0)
        .map(|(s, n)| s / n as f64)
        .collect();
    Ok(GroupSummary {
        learner,
        scenario,
        n_cells: cells.len(),
        mean_auc: ci_of(config.ci_over, &results, |c| c.mean_auc)?,
        final_auc: ci_of(config.ci_over, &results, |c| c.final_auc)?,
        q1_auc: ci_of(config.ci_over, &results, |c| c.quartile_means[0])?,
        q4_auc: ci_of(config.ci_over, &results, |c| c.quartile_means[3])?,
        effort_gain: describe(&gains)?,
        timeline,
    })
}

struct Prepared {
    train: Vec<Instance>,
    stream: Vec<Instance>,
    test: Vec<Instance>,
    mask: SelectionMask,
}

fn prepare_unit(
    config: &ExperimentConfig,
    dataset: &Dataset,
    labels: &[usize],
    folds: &[Vec<usize>],
    r: usize,
    f: usize,
    warnings: &mut Vec<String>,
) -> Result<Prepared> {
    let test_ids = &folds[f];
    let non_test: Vec<usize> = folds
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != f)
        .flat_map(|(_, fold)| fold.iter().copied())
        .collect();
    let mut rng = SeededRng::for_path(config.seed, &[stage::PARTITION, r as u64, f as u64]);
    let split = partition_train_stream(&non_test, labels, config.train_frac, &mut rng)?;
    warnings.extend(split.warnings.iter().map(|w| format!("repeat {r} fold {f}: {w}")));

    let mut train_ids = split.train;
    train_ids.shuffle(&mut SeededRng::for_path(config.seed, &[stage::TRAIN_ORDER, r as u64, f as u64]));
    let raw_train: Vec<Instance> = train_ids.iter().map(|&i| dataset.instances[i].clone()).collect();
    let selection_seed = SeededRng::for_path(config.seed, &[stage::FEATURE_JITTER, r as u64, f as u64]).next_u64();
    let selection = select_top_k(&raw_train, selection_seed)?;
    warnings.extend(selection.warnings.iter().map(|w| format!("repeat {r} fold {f}: {w}")));
    let mask = selection.mask;

    let masked = |ids: &[usize]| -> Result<Vec<Instance>> {
        ids.iter().map(|&i| apply_mask(&dataset.instances[i], &mask)).collect()
    };
    Ok(Prepared {
        train: raw_train.iter().map(|i| apply_mask(i, &mask)).collect::<Result<_>>()?,
        stream: masked(&split.stream)?,
        test: masked(test_ids)?,
        mask,
    })
}

fn run_unit(config: &ExperimentConfig, dataset: &Dataset, labels: &[usize], folds: &[Vec<usize>], r: usize, f: usize) -> UnitOutput {
    let mut warnings = Vec::new();
    let fail_all = |e: &Error| -> Vec<std::result::Result<CellRun, CellFailure>> {
        config
            .learners
            .iter()
            .flat_map(|&learner| {
                config.scenarios.iter().map(move |&scenario| {
                    Err(CellFailure {
                        learner,
                        scenario,
                        repeat: r,
                        fold: f,
                        error: e.to_string(),
                    })
                })
            })
            .collect()
    };
    let prepared = match prepare_unit(config, dataset, labels, folds, r, f, &mut warnings) {
        Ok(p) => p,
        Err(e) => {
            return UnitOutput {
                runs: fail_all(&e),
                warnings,
            }
        }
    };
    let mut runs = Vec::new();
    for &learner in &config.learners {
        for &scenario in &config.scenarios {
            runs.push(run_cell(config, dataset.n_classes(), &prepared, learner, scenario, r, f).map_err(|e| CellFailure {
                learner,
                scenario,
                repeat: r,
                fold: f,
                error: e.to_string(),
            }));
        }
    }
    UnitOutput { runs, warnings }
}

fn run_cell(
    config: &ExperimentConfig,
    n_classes: usize,
    data: &Prepared,
    kind: LearnerKind,
    scenario: QueryMode,
    r: usize,
    f: usize,
) -> Result<CellRun> {
    let mut learner = build(kind, n_classes, data.mask.k(), &config.params)?;
    for inst in &data.train {
        let y = inst.label.ok_or_else(|| Error::DataIntegrity(format!("training instance {} is unlabeled", inst.id)))?;
        learner.learn(&inst.features, y)?;
    }
    let scorer = TestSetScorer::new(&data.test)?;
    let initial_auc = scorer.score(learner.as_ref())?;

    let oracle = OracleSim::from_instances(&data.stream);
    let unlabeled: Vec<Instance> = data
        .stream
        .iter()
        .map(|i| Instance {
            label: None,
            ..i.clone()
        })
        .collect();
    let records = run_stream(learner.as_mut(), &unlabeled, &oracle, &config.policy(scenario), &scorer, config.eval_every)?;

    let series: Vec<f64> = records.iter().filter_map(|r| r.test_auc_after).collect();
    let quartile_means = timeline_quartile_means(&series)?;
    let final_auc = *series.last().ok_or_else(|| Error::InsufficientData("no evaluated steps".into()))?;
    let n_queried = records.iter().filter(|r| r.queried).count();
    Ok(CellRun {
        result: CellResult {
            learner: kind,
            scenario,
            repeat: r,
            fold: f,
            n_train: data.train.len(),
            n_stream: data.stream.len(),
            n_test: data.test.len(),
            selected_features: data.mask.selected.clone(),
            initial_auc,
            final_auc,
            mean_auc: series.iter().sum::<f64>() / series.len() as f64,
            quartile_means,
            effort_gain: effort_gain(&records)?,
            n_queried,
        },
        records: records
            .into_iter()
            .map(|r| StepRecord {
                step: r.step,
                uncertainty: r.uncertainty,
                queried: r.queried,
                auc: r.test_auc_after,
            })
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{gen_blobs, BlobSpec};

    fn small_config() -> ExperimentConfig {
        ExperimentConfig {
            learners: vec![LearnerKind::Slgr, LearnerKind::Sknn],
            k_folds: 3,
            repeats: 2,
            eval_every: 5,
            seed: 11,
            ..ExperimentConfig::default()
        }
    }

    fn small_data() -> Dataset {
        gen_blobs(&BlobSpec {
            n_per_class: vec![40, 30, 20],
            dims: 16,
            seed: 3,
            ..BlobSpec::default()
        })
        .unwrap()
    }

    #[test]
    fn counts_and_partition_sizes() {
        let data = small_data();
        let out = run_experiment(&small_config(), &data).unwrap();
        assert!(out.report.incomplete.is_empty());
        assert_eq!(out.runs.len(), 2 * 3 * 2 * 2);
        assert_eq!(out.report.groups.len(), 4);
        for c in &out.report.cells {
            assert_eq!(c.n_train + c.n_stream + c.n_test, data.len());
            assert_eq!(c.selected_features.len(), (c.n_train as f64).sqrt().floor() as usize);
            if c.scenario == QueryMode::NoAl {
                assert_eq!(c.effort_gain, 0.0);
            }
        }
        for g in &out.report.groups {
            assert!(g.mean_auc.half_width >= 0.0);
            assert!((0.0..=1.0).contains(&g.q1_auc.mean) && (0.0..=1.0).contains(&g.q4_auc.mean));
        }
    }

    #[test]
    fn schedule_independent() {
        let data = small_data();
        let mut a = small_config();
        a.jobs = 1;
        let mut b = small_config();
        b.jobs = 4;
        let ra = run_experiment(&a, &data).unwrap();
        let rb = run_experiment(&b, &data).unwrap();
        assert_eq!(ra.runs, rb.runs);
        assert_eq!(
            serde_json::to_string(&ra.report).unwrap(),
            serde_json::to_string(&rb.report).unwrap()
        );
    }

    #[test]
    fn stratification_failure_is_reported() {
        let data = small_data();
        let cfg = ExperimentConfig {
            k_folds: 25,
            ..small_config()
        };
        assert!(matches!(run_experiment(&cfg, &data), Err(Error::Stratification(_))));
        let bad = ExperimentConfig {
            learners: vec![],
            ..small_config()
        };
        assert!(matches!(run_experiment(&bad, &data), Err(Error::Config(_))));
    }

    #[test]
    fn repeat_means_ci() {
        let data = small_data();
        let cfg = ExperimentConfig {
            ci_over: CiOver::RepeatMeans,
            ..small_config()
        };
        let out = run_experiment(&cfg, &data).unwrap();
        assert_eq!(out.report.groups[0].mean_auc.n, 2);
    }
}
