//! Cross-validation, ranking metrics and experiment orchestration.

pub mod cv;
pub mod experiment;
pub mod metrics;

pub use cv::{partition_train_stream, stratified_kfold, TrainStreamSplit};
pub use experiment::{
    run_experiment, CellFailure, CellResult, CellRun, CiOver, ExperimentConfig, ExperimentOutcome, GroupSummary,
    RunReport, ScenarioSummary, StepRecord, TestSetScorer,
};
pub use metrics::{auc_binary, auc_ovr_weighted, describe, mean_ci, timeline_quartile_means, Distribution, MeanCi};
