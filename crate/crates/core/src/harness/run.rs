//! End-to-end runs and their on-disk artifacts.
//!
//! A run directory holds:
//!
//! ```text
//! config.toml          effective config
//! run_meta.toml        config hash, seed, versions, timestamp
//! penalty.csv          penalty used (absent for the baseline)
//! train_log.csv        one row per step
//! validation.csv       validation macro-Dice at each evaluation
//! final.ckpt best.ckpt
//! report.csv report.txt
//! aux/                 model trained to build a CM or HCCM penalty
//! ```
//!
//! Only `run_meta.toml` carries a timestamp; everything else is a pure
//! function of the config.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::{ExperimentConfig, PenaltySource};
use super::evaluate::{evaluate, named, DatasetVariant};
use super::pipeline::{build_cm_penalty, build_hccm_pipeline, resolve_penalty};
use super::train::{save_log, train_model, LogRow, TrainOutcome};
use crate::data::{load_dataset, Dataset};
use crate::error::{Error, Result};
use crate::loss::{LossMode, LossVariant};
use crate::metrics::{render_table, render_table_labeled, report_csv, rows_to_csv, MetricsReport, ReportRow};
use crate::model::{save_checkpoint, CHECKPOINT_VERSION};
use crate::penalty::{save_penalty_csv, PenaltyMatrix};

pub const CONFIG_FILE: &str = "config.toml";
pub const META_FILE: &str = "run_meta.toml";
pub const PENALTY_FILE: &str = "penalty.csv";
pub const LOG_FILE: &str = "train_log.csv";
pub const VALIDATION_FILE: &str = "validation.csv";
pub const FINAL_CKPT: &str = "final.ckpt";
pub const BEST_CKPT: &str = "best.ckpt";
pub const REPORT_FILE: &str = "report.csv";
pub const ABLATION_FILE: &str = "ablation.csv";
pub const ABLATION_HEADER: &str = "dataset_variant,ablation,metric,mean,std,n";

/// The config's dataset: loaded from `data_dir` when set, else generated.
pub fn dataset_for(cfg: &ExperimentConfig) -> Result<Dataset> {
    let ds = match &cfg.data_dir {
        Some(dir) => load_dataset(dir)?,
        None => Dataset::generate(&cfg.phantom, cfg.dataset_size, &cfg.split_ratios, cfg.seed)?,
    };
    for s in &ds.samples {
        s.labels.check_range(cfg.classes())?;
    }
    Ok(ds)
}

#[derive(Serialize)]
struct RunMeta<'a> {
    command: &'a str,
    config_hash: String,
    seed: u64,
    crate_version: &'a str,
    checkpoint_version: u32,
    unix_time: u64,
}

pub fn write_metadata(dir: &Path, cfg: &ExperimentConfig, command: &str) -> Result<()> {
    create_dir(dir)?;
    let meta = RunMeta {
        command,
        config_hash: cfg.hash(),
        seed: cfg.seed,
        crate_version: env!("CARGO_PKG_VERSION"),
        checkpoint_version: CHECKPOINT_VERSION,
        unix_time: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map_or(0, |d| d.as_secs()),
    };
    write(&dir.join(META_FILE), &toml::to_string(&meta).expect("metadata serializes"))?;
    write(&dir.join(CONFIG_FILE), &cfg.to_toml())
}

pub(crate) fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

pub(crate) fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn save_training(dir: &Path, run: &TrainOutcome) -> Result<()> {
    create_dir(dir)?;
    save_log(&run.log, &dir.join(LOG_FILE))?;
    let mut curve = String::from("step,validation_dice\n");
    for (step, d) in &run.validation {
        let _ = writeln!(curve, "{step},{d}");
    }
    write(&dir.join(VALIDATION_FILE), &curve)?;
    save_checkpoint(&run.final_params, &dir.join(FINAL_CKPT))?;
    save_checkpoint(&run.best_params, &dir.join(BEST_CKPT))
}

pub fn save_reports(dir: &Path, reports: &[(String, MetricsReport)]) -> Result<()> {
    let csv = report_csv(reports);
    write(&dir.join(REPORT_FILE), &csv)?;
    let rows: Vec<ReportRow> = reports.iter().flat_map(|(n, r)| r.rows(n)).collect();
    write(&dir.join("report.txt"), &render_table(&rows))
}

#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub dir: PathBuf,
    pub penalty: Option<PenaltyMatrix>,
    pub outcome: TrainOutcome,
    /// Run that produced a confusion-derived penalty, if any.
    pub aux: Option<TrainOutcome>,
    /// Reports for the best-validation checkpoint.
    pub reports: Vec<(DatasetVariant, MetricsReport)>,
}

/// Builds the penalty, trains, evaluates the best checkpoint and writes all
/// artifacts to `cfg.out_dir`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunArtifacts> {
    cfg.validate()?;
    let ds = dataset_for(cfg)?;
    let dir = cfg.out_dir.clone();
    write_metadata(&dir, cfg, "train")?;
    let (penalty, aux) = if cfg.loss.needs_penalty() {
        let (w, aux) = resolve_penalty(cfg, &ds, cfg.effective_penalty_source())?;
        save_penalty_csv(&w, &dir.join(PENALTY_FILE))?;
        (Some(w), aux)
    } else {
        (None, None)
    };
    if let Some(a) = &aux {
        save_training(&dir.join("aux"), a)?;
    }
    log::info!("training {:?} for {} iterations", cfg.loss.variant, cfg.iterations);
    let outcome = train_model(cfg, &ds, &cfg.loss, penalty.as_ref())?;
    save_training(&dir, &outcome)?;
    let reports = evaluate(&outcome.best_params, &ds, cfg)?;
    let named_reports = named(reports.clone());
    save_reports(&dir, &named_reports)?;
    Ok(RunArtifacts {
        dir,
        penalty,
        outcome,
        aux,
        reports,
    })
}

/// One arm of the ablation study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AblationArm {
    pub name: &'static str,
    pub mode: LossMode,
    pub source: PenaltySource,
}

/// Full objective, then each component removed in turn. The constant-β arm
/// uses `cfg.loss.constant_beta`.
pub fn ablation_arms(cfg: &ExperimentConfig) -> [AblationArm; 4] {
    let full = LossMode {
        variant: LossVariant::DominoppEq2,
        use_hccm: true,
        use_dynamic_scale: true,
        use_decaying_beta: true,
        constant_beta: cfg.loss.constant_beta,
    };
    [
        AblationArm {
            name: "full",
            mode: full,
            source: PenaltySource::Hccm,
        },
        AblationArm {
            name: "wo_hccm",
            mode: LossMode { use_hccm: false, ..full },
            source: PenaltySource::Cm,
        },
        AblationArm {
            name: "wo_r",
            mode: LossMode {
                use_decaying_beta: false,
                ..full
            },
            source: PenaltySource::Hccm,
        },
        AblationArm {
            name: "wo_s",
            mode: LossMode {
                use_dynamic_scale: false,
                ..full
            },
            source: PenaltySource::Hccm,
        },
    ]
}

#[derive(Debug, Clone)]
pub struct AblationRun {
    pub arm: AblationArm,
    pub log: Vec<LogRow>,
    pub reports: Vec<(DatasetVariant, MetricsReport)>,
}

#[derive(Debug, Clone)]
pub struct AblationResult {
    pub runs: Vec<AblationRun>,
    pub w_hccm: PenaltyMatrix,
    pub w_cm: PenaltyMatrix,
}

impl AblationResult {
    /// Overall Dice and Hausdorff per arm and dataset variant.
    pub fn rows(&self) -> Vec<ReportRow> {
        let mut out = Vec::new();
        for run in &self.runs {
            for (variant, report) in &run.reports {
                for (metric, s) in [
                    ("dice".to_string(), report.overall_dice),
                    (report.hausdorff_metric_name(), report.overall_hausdorff),
                ] {
                    out.push(ReportRow {
                        dataset_variant: variant.to_string(),
                        class: run.arm.name.to_string(),
                        metric,
                        mean: s.map(|s| s.mean),
                        std: s.map(|s| s.std),
                        n: s.map_or(0, |s| s.n),
                    });
                }
            }
        }
        out
    }

    /// CSV with `ablation` in place of the report's `class` column.
    pub fn to_csv(&self) -> String {
        ablation_csv(&self.rows())
    }
}

pub fn ablation_csv(rows: &[ReportRow]) -> String {
    let body = rows_to_csv(rows);
    let mut out = String::new();
    let _ = writeln!(out, "{ABLATION_HEADER}");
    out.push_str(body.split_once('\n').map_or("", |(_, rest)| rest));
    out
}

/// Runs the four ablation arms on identical data and seeds. The HCCM and CM
/// penalties are built once and shared.
pub fn ablate(cfg: &ExperimentConfig) -> Result<AblationResult> {
    cfg.validate()?;
    let ds = dataset_for(cfg)?;
    let dir = cfg.out_dir.clone();
    write_metadata(&dir, cfg, "ablate")?;
    let (w_hccm, hc_run) = build_hccm_pipeline(cfg, &ds)?;
    save_training(&dir.join("aux_hccm"), &hc_run)?;
    save_penalty_csv(&w_hccm, &dir.join("penalty_hccm.csv"))?;
    let (w_cm, cm_run) = build_cm_penalty(cfg, &ds)?;
    save_training(&dir.join("aux_cm"), &cm_run)?;
    save_penalty_csv(&w_cm, &dir.join("penalty_cm.csv"))?;

    let mut runs = Vec::new();
    for arm in ablation_arms(cfg) {
        let w = match arm.source {
            PenaltySource::Cm => &w_cm,
            _ => &w_hccm,
        };
        log::info!("ablation arm {}", arm.name);
        let outcome = train_model(cfg, &ds, &arm.mode, Some(w))?;
        let arm_dir = dir.join(arm.name);
        save_training(&arm_dir, &outcome)?;
        let reports = evaluate(&outcome.best_params, &ds, cfg)?;
        save_reports(&arm_dir, &named(reports.clone()))?;
        runs.push(AblationRun {
            arm,
            log: outcome.log,
            reports,
        });
    }
    let result = AblationResult { runs, w_hccm, w_cm };
    write(&dir.join(ABLATION_FILE), &result.to_csv())?;
    write(&dir.join("ablation.txt"), &render_table_labeled(&result.rows(), "ablation"))?;
    Ok(result)
}
