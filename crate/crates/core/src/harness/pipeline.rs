//! Penalty construction that needs data or a trained model.
//!
//! CM: a baseline model's confusion on the holdout split. HCCM: the same
//! with a model trained under the hierarchy penalty at constant weight.

use std::collections::HashSet;

use super::config::{ExperimentConfig, PenaltySource};
use super::train::{train_model, TrainOutcome};
use crate::data::{Dataset, Split};
use crate::error::{Error, Result};
use crate::grid::LabelMap;
use crate::loss::LossMode;
use crate::model::{predict, ModelParams};
use crate::penalty::{
    accumulate_confusion, build_hc_matrix, figure2_fixture, load_penalty_csv, normalize_confusion,
    penalty_from_confusion, ConfusionMatrix, PenaltyMatrix, Provenance,
};

/// Fails unless the holdout and train id sets are disjoint and the holdout
/// split is nonempty.
pub fn check_holdout(ds: &Dataset) -> Result<()> {
    let holdout = ds.splits.ids(Split::Holdout);
    if holdout.is_empty() {
        return Err(Error::Config("the penalty holdout split is empty".into()));
    }
    let train: HashSet<&String> = ds.splits.ids(Split::Train).iter().collect();
    if let Some(id) = holdout.iter().find(|id| train.contains(id)) {
        return Err(Error::Validation(format!("sample {id} is in both the train and holdout splits")));
    }
    Ok(())
}

/// Penalty from `(prediction, truth)` pairs: confusion, row normalization,
/// complement.
pub fn confusion_penalty<'a>(
    pairs: impl IntoIterator<Item = (LabelMap, &'a LabelMap)>,
    classes: &crate::penalty::ClassSet,
) -> Result<PenaltyMatrix> {
    let mut cm = ConfusionMatrix::new(classes.clone());
    for (pred, truth) in pairs {
        cm = accumulate_confusion(&pred, truth, cm)?;
    }
    penalty_from_confusion(&normalize_confusion(&cm))
}

/// Confusion-derived penalty of `params` on the holdout split.
pub fn holdout_penalty(params: &ModelParams, ds: &Dataset, cfg: &ExperimentConfig) -> Result<PenaltyMatrix> {
    check_holdout(ds)?;
    let holdout = ds.split(Split::Holdout)?;
    let pairs = holdout
        .iter()
        .map(|s| Ok((predict(params, &s.image)?, &s.labels)))
        .collect::<Result<Vec<_>>>()?;
    confusion_penalty(pairs, &cfg.phantom.classes)
}

pub fn hc_penalty(cfg: &ExperimentConfig) -> Result<PenaltyMatrix> {
    build_hc_matrix(&cfg.hierarchy, &cfg.phantom.classes)
}

/// Trains a baseline model and turns its holdout confusion into `W_CM`.
pub fn build_cm_penalty(cfg: &ExperimentConfig, ds: &Dataset) -> Result<(PenaltyMatrix, TrainOutcome)> {
    check_holdout(ds)?;
    log::info!("training the baseline model for the confusion penalty");
    let run = train_model(cfg, ds, &LossMode::baseline(), None)?;
    let w = holdout_penalty(&run.best_params, ds, cfg)?;
    Ok((w, run))
}

/// Stage 1 trains under `W_HC` with constant weight; stage 2 turns the
/// stage-1 model's holdout confusion into `W_HCCM`.
pub fn build_hccm_pipeline(cfg: &ExperimentConfig, ds: &Dataset) -> Result<(PenaltyMatrix, TrainOutcome)> {
    check_holdout(ds)?;
    let w_hc = hc_penalty(cfg)?;
    log::info!("training the hierarchy-regularized model for the HCCM penalty");
    let run = train_model(cfg, ds, &LossMode::domino_eq1(), Some(&w_hc))?;
    let w = holdout_penalty(&run.best_params, ds, cfg)?.with_provenance(Provenance::Hccm);
    Ok((w, run))
}

/// The penalty for `source`, plus the auxiliary training run if one was
/// needed to build it.
pub fn resolve_penalty(
    cfg: &ExperimentConfig,
    ds: &Dataset,
    source: PenaltySource,
) -> Result<(PenaltyMatrix, Option<TrainOutcome>)> {
    let w = match source {
        PenaltySource::Hierarchy => hc_penalty(cfg)?,
        PenaltySource::Fixture => figure2_fixture(),
        PenaltySource::File => {
            let path = cfg
                .penalty
                .path
                .as_ref()
                .ok_or_else(|| Error::Config("penalty source 'file' needs penalty.path".into()))?;
            load_penalty_csv(path)?
        }
        PenaltySource::Cm => {
            let (w, run) = build_cm_penalty(cfg, ds)?;
            return Ok((w, Some(run)));
        }
        PenaltySource::Hccm => {
            let (w, run) = build_hccm_pipeline(cfg, ds)?;
            return Ok((w, Some(run)));
        }
    };
    if w.classes() != &cfg.phantom.classes {
        return Err(Error::Config(format!(
            "penalty classes {:?} differ from the data classes {:?}",
            w.classes().names(),
            cfg.phantom.classes.names()
        )));
    }
    Ok((w, None))
}
