//! The training loop: batch size 1, one epoch per pass over the train split.

use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::ExperimentConfig;
use crate::data::{child_seed, stream, Dataset, SegmentationSample, Split};
use crate::error::{Error, Result};
use crate::loss::{domino_pp_loss, LossBreakdown, LossMode, ScaleState, TrainingClock};
use crate::metrics::dice_score;
use crate::model::{adam_step, backward, forward, init_params, predict, softmax_backward, softmax_map, AdamState, ModelParams};
use crate::penalty::PenaltyMatrix;

pub const LOG_HEADER: &str = "step,epoch,standard,reg_raw,beta,scale,total";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogRow {
    /// 1-based optimizer step.
    pub step: usize,
    pub epoch: usize,
    pub loss: LossBreakdown,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub final_params: ModelParams,
    /// Parameters at the evaluation with the highest validation macro-Dice.
    pub best_params: ModelParams,
    pub best_step: usize,
    pub best_validation_dice: f64,
    pub log: Vec<LogRow>,
    /// `(step, validation macro-Dice)` at each evaluation.
    pub validation: Vec<(usize, f64)>,
    pub total_epochs: usize,
}

/// Mean over samples of the per-sample mean Dice across all classes.
pub fn macro_dice(params: &ModelParams, samples: &[&SegmentationSample], classes: usize) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Config("no samples to score".into()));
    }
    let mut total = 0.0;
    for s in samples {
        let pred = predict(params, &s.image)?;
        let mut sum = 0.0;
        for c in 0..classes {
            sum += dice_score(&pred, &s.labels, c as u8)?;
        }
        total += sum / classes as f64;
    }
    Ok(total / samples.len() as f64)
}

/// Trains a fresh model on the train split of `ds` with the given objective.
///
/// The model init and the per-epoch shuffles come from `cfg.seed`, so two
/// calls with equal arguments return identical outcomes.
pub fn train_model(
    cfg: &ExperimentConfig,
    ds: &Dataset,
    mode: &LossMode,
    w: Option<&PenaltyMatrix>,
) -> Result<TrainOutcome> {
    mode.validate()?;
    if mode.needs_penalty() && w.is_none() {
        return Err(Error::Config("the regularized loss needs a penalty matrix".into()));
    }
    let classes = cfg.classes();
    if let Some(w) = w {
        if w.n() == classes && w.classes() != &cfg.phantom.classes {
            return Err(Error::Config("penalty class order differs from the data's".into()));
        }
        if w.n() != classes {
            return Err(Error::DimensionMismatch(format!(
                "penalty is {}x{} but the data has {classes} classes",
                w.n(),
                w.n()
            )));
        }
    }
    let train = ds.split(Split::Train)?;
    let validation = ds.split(Split::Validation)?;
    if train.is_empty() || validation.is_empty() {
        return Err(Error::Config("train and validation splits must be nonempty".into()));
    }
    for s in train.iter().chain(&validation) {
        s.labels.check_range(classes)?;
    }
    let n_train = train.len();
    let total_epochs = cfg.iterations.div_ceil(n_train);
    let eval_every = cfg.effective_eval_interval();

    let mut params = init_params(child_seed(cfg.seed, stream::MODEL_INIT), cfg.features, classes)?;
    let mut adam = AdamState::new(&params, cfg.adam);
    let mut scale_state = ScaleState::new(mode.scale_policy());
    let shuffle_seed = child_seed(cfg.seed, stream::SHUFFLE);
    let mut order: Vec<usize> = (0..n_train).collect();

    let mut log = Vec::with_capacity(cfg.iterations);
    let mut val_curve = Vec::new();
    let mut best: Option<(ModelParams, usize, f64)> = None;

    for step in 0..cfg.iterations {
        let epoch = step / n_train + 1;
        if step % n_train == 0 {
            order = (0..n_train).collect();
            order.shuffle(&mut ChaCha8Rng::seed_from_u64(child_seed(shuffle_seed, epoch as u64)));
        }
        let sample = train[order[step % n_train]];
        let (logits, cache) = forward(&params, &sample.image)?;
        let probs = softmax_map(&logits).map_err(|e| Error::NonFinite(format!("step {}: {e}", step + 1)))?;
        let clock = TrainingClock::new(epoch, total_epochs)?;
        let (loss, grad_probs) = domino_pp_loss(&probs, &sample.labels, w, clock, mode, &mut scale_state)
            .map_err(|e| match e {
                Error::NonFinite(m) => Error::NonFinite(format!("step {}: {m}", step + 1)),
                other => other,
            })?;
        if !loss.total.is_finite() {
            log::error!("non-finite loss at step {} ({:?})", step + 1, loss);
            return Err(Error::NonFinite(format!("loss {} at step {}", loss.total, step + 1)));
        }
        let grad_logits = softmax_backward(&probs, &grad_probs);
        let grads = backward(&params, &cache, &grad_logits)?;
        adam_step(&mut params, &grads, &mut adam).map_err(|e| Error::NonFinite(format!("step {}: {e}", step + 1)))?;
        log.push(LogRow {
            step: step + 1,
            epoch,
            loss,
        });

        let done = step + 1;
        if done % eval_every == 0 || done == cfg.iterations {
            let d = macro_dice(&params, &validation, classes)?;
            val_curve.push((done, d));
            log::debug!("step {done}: loss {:.4}, validation dice {d:.4}", loss.total);
            if best.as_ref().is_none_or(|b| d > b.2) {
                best = Some((params.clone(), done, d));
            }
        }
    }
    let (best_params, best_step, best_validation_dice) = best.expect("at least one evaluation");
    Ok(TrainOutcome {
        final_params: params,
        best_params,
        best_step,
        best_validation_dice,
        log,
        validation: val_curve,
        total_epochs,
    })
}

pub fn log_to_csv(rows: &[LogRow]) -> String {
    let mut out = format!("{LOG_HEADER}\n");
    for r in rows {
        let l = &r.loss;
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.step,
            r.epoch,
            l.standard,
            l.reg_raw,
            l.beta,
            l.scale.value(),
            l.total
        )
        .unwrap();
    }
    out
}

pub fn save_log(rows: &[LogRow], path: &Path) -> Result<()> {
    std::fs::write(path, log_to_csv(rows)).map_err(|e| Error::io(path, e))
}

/// A training-log row read back from CSV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParsedLogRow {
    pub step: usize,
    pub epoch: usize,
    pub standard: f64,
    pub reg_raw: f64,
    pub beta: f64,
    pub scale: f64,
    pub total: f64,
}

pub fn parse_log_csv(text: &str, origin: &str) -> Result<Vec<ParsedLogRow>> {
    let err = |line: usize, msg: String| Error::Parse {
        path: origin.to_string(),
        line,
        msg,
    };
    let mut lines = text.lines();
    if lines.next() != Some(LOG_HEADER) {
        return Err(err(1, format!("expected header {LOG_HEADER:?}")));
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let c: Vec<&str> = line.split(',').collect();
            if c.len() != 7 {
                return Err(err(i + 2, format!("expected 7 fields, found {}", c.len())));
            }
            let f = |k: usize| c[k].parse::<f64>().map_err(|_| err(i + 2, format!("bad number {:?}", c[k])));
            let u = |k: usize| c[k].parse::<usize>().map_err(|_| err(i + 2, format!("bad integer {:?}", c[k])));
            Ok(ParsedLogRow {
                step: u(0)?,
                epoch: u(1)?,
                standard: f(2)?,
                reg_raw: f(3)?,
                beta: f(4)?,
                scale: f(5)?,
                total: f(6)?,
            })
        })
        .collect()
}
