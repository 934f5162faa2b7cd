//! Experiment orchestration: config, training loop, penalty pipeline,
//! evaluation, ablation and the CLI.

pub mod cli;
mod config;
mod evaluate;
mod pipeline;
mod run;
mod train;

pub use config::{ExperimentConfig, PenaltyConfig, PenaltySource, ShiftConfig};
pub use evaluate::{evaluate, evaluate_samples, named, test_variant, DatasetVariant};
pub use pipeline::{
    build_cm_penalty, build_hccm_pipeline, check_holdout, confusion_penalty, hc_penalty, holdout_penalty,
    resolve_penalty,
};
pub use run::{
    ablate, ablation_arms, ablation_csv, dataset_for, run_experiment, save_reports, write_metadata, AblationArm,
    AblationResult, AblationRun, RunArtifacts, ABLATION_FILE, ABLATION_HEADER, BEST_CKPT, CONFIG_FILE, FINAL_CKPT,
    LOG_FILE, META_FILE, PENALTY_FILE, REPORT_FILE, VALIDATION_FILE,
};
pub use train::{log_to_csv, macro_dice, parse_log_csv, save_log, train_model, LogRow, ParsedLogRow, TrainOutcome, LOG_HEADER};
