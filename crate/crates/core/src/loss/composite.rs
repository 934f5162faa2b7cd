//! Composite objectives: baseline DiceCE, the constant-weight regularized
//! loss, and the decaying, dynamically scaled variant.

use serde::{Deserialize, Serialize};

use super::schedule::{beta_at, Scale, ScalePolicy, ScaleState, TrainingClock};
use super::{dice_ce, domino_reg};
use crate::error::{Error, Result};
use crate::grid::{LabelMap, ScoreMap, Tensor3};
use crate::penalty::PenaltyMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossVariant {
    /// DiceCE only.
    Baseline,
    /// `DiceCE + β s W-term` with β constant and `s` frozen after epoch 1.
    DominoEq1,
    /// `(1 - β) DiceCE + β s W-term`, subject to the ablation flags.
    DominoppEq2,
}

/// Objective selection plus the ablation switches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossMode {
    pub variant: LossVariant,
    /// Penalty comes from the HC-then-confusion pipeline rather than a plain
    /// confusion-derived matrix. Consumed by the harness.
    pub use_hccm: bool,
    /// Recompute `s` each step (otherwise frozen after the first epoch).
    pub use_dynamic_scale: bool,
    /// Linearly decaying β (otherwise `constant_beta`, with the data term at
    /// full weight).
    pub use_decaying_beta: bool,
    pub constant_beta: f64,
}

impl Default for LossMode {
    fn default() -> Self {
        Self::dominopp()
    }
}

impl LossMode {
    pub fn baseline() -> Self {
        Self {
            variant: LossVariant::Baseline,
            use_hccm: false,
            use_dynamic_scale: false,
            use_decaying_beta: false,
            constant_beta: 0.0,
        }
    }

    pub fn domino_eq1() -> Self {
        Self {
            variant: LossVariant::DominoEq1,
            use_hccm: false,
            use_dynamic_scale: false,
            use_decaying_beta: false,
            constant_beta: 1.0,
        }
    }

    pub fn dominopp() -> Self {
        Self {
            variant: LossVariant::DominoppEq2,
            use_hccm: true,
            use_dynamic_scale: true,
            use_decaying_beta: true,
            constant_beta: 1.0,
        }
    }

    pub fn scale_policy(&self) -> ScalePolicy {
        match self.variant {
            LossVariant::DominoppEq2 if self.use_dynamic_scale => ScalePolicy::Dynamic,
            _ => ScalePolicy::FirstEpoch,
        }
    }

    /// Weight on the standard loss for a given β.
    pub fn data_weight(&self, beta: f64) -> f64 {
        match self.variant {
            LossVariant::DominoppEq2 if self.use_decaying_beta => 1.0 - beta,
            _ => 1.0,
        }
    }

    pub fn needs_penalty(&self) -> bool {
        self.variant != LossVariant::Baseline
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.constant_beta) {
            return Err(Error::Config(format!("constant_beta {} is outside [0, 1]", self.constant_beta)));
        }
        Ok(())
    }
}

/// Per-step decomposition of the objective.
///
/// `total = data_weight * standard + beta * scale * reg_raw`; under the
/// decaying schedule `data_weight = 1 - beta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBreakdown {
    pub standard: f64,
    pub reg_raw: f64,
    pub scale: Scale,
    pub beta: f64,
    pub data_weight: f64,
    pub total: f64,
}

/// `DiceCE + β s reg` with caller-supplied β and scale.
pub fn domino_eq1_loss(
    scores: &ScoreMap,
    truth: &LabelMap,
    w: &PenaltyMatrix,
    beta: f64,
    scale: Scale,
) -> Result<(LossBreakdown, Tensor3)> {
    let standard = dice_ce(scores, truth)?;
    let reg = domino_reg(scores, truth, w)?;
    let k = beta * scale.value();
    let total = standard.value + k * reg.value;
    let mut grad = standard.grad;
    for (g, r) in grad.data.iter_mut().zip(&reg.grad.data) {
        *g += k * r;
    }
    let breakdown = LossBreakdown {
        standard: standard.value,
        reg_raw: reg.value,
        scale,
        beta,
        data_weight: 1.0,
        total,
    };
    Ok((breakdown, grad))
}

/// Evaluates the objective selected by `mode` for one step, advancing
/// `scale_state`. Returns the breakdown and the gradient w.r.t. `scores`.
///
/// `w` may be `None` only for the baseline variant.
pub fn domino_pp_loss(
    scores: &ScoreMap,
    truth: &LabelMap,
    w: Option<&PenaltyMatrix>,
    clock: TrainingClock,
    mode: &LossMode,
    scale_state: &mut ScaleState,
) -> Result<(LossBreakdown, Tensor3)> {
    let beta = beta_at(clock, mode);
    match mode.variant {
        LossVariant::Baseline => {
            let standard = dice_ce(scores, truth)?;
            let scale = scale_state.observe(clock.current_epoch(), standard.value)?;
            let reg_raw = match w {
                Some(w) => domino_reg(scores, truth, w)?.value,
                None => 0.0,
            };
            let breakdown = LossBreakdown {
                standard: standard.value,
                reg_raw,
                scale,
                beta,
                data_weight: 1.0,
                total: standard.value,
            };
            Ok((breakdown, standard.grad))
        }
        LossVariant::DominoEq1 => {
            let w = w.ok_or_else(|| Error::Config("the regularized loss needs a penalty matrix".into()))?;
            let standard = dice_ce(scores, truth)?.value;
            let scale = scale_state.observe(clock.current_epoch(), standard)?;
            domino_eq1_loss(scores, truth, w, beta, scale)
        }
        LossVariant::DominoppEq2 => {
            let w = w.ok_or_else(|| Error::Config("the regularized loss needs a penalty matrix".into()))?;
            let standard = dice_ce(scores, truth)?;
            let reg = domino_reg(scores, truth, w)?;
            let scale = scale_state.observe(clock.current_epoch(), standard.value)?;
            let data_weight = mode.data_weight(beta);
            let reg_weight = beta * scale.value();
            let total = data_weight * standard.value + reg_weight * reg.value;
            let mut grad = standard.grad;
            for (g, r) in grad.data.iter_mut().zip(&reg.grad.data) {
                *g = data_weight * *g + reg_weight * r;
            }
            let breakdown = LossBreakdown {
                standard: standard.value,
                reg_raw: reg.value,
                scale,
                beta,
                data_weight,
                total,
            };
            Ok((breakdown, grad))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::penalty::figure2_fixture;

    fn one_hot_case() -> (ScoreMap, LabelMap) {
        let truth = LabelMap::from_vec(2, 2, vec![0, 1, 4, 11]).unwrap();
        let mut s = Tensor3::zeros(2, 2, 12);
        for (p, &t) in truth.labels.iter().enumerate() {
            s.pixel_mut(p)[t as usize] = 1.0;
        }
        (s, truth)
    }

    #[test]
    fn zero_beta_gives_dice_ce() {
        let truth = LabelMap::from_vec(1, 2, vec![0, 2]).unwrap();
        let scores = Tensor3::from_vec(1, 2, 12, (0..24).map(|k| 1.0 / 12.0 + (k % 3) as f64 * 1e-3).collect()).unwrap();
        let w = figure2_fixture();
        let clock = TrainingClock::new(4, 4).unwrap();
        let mut st = ScaleState::new(ScalePolicy::Dynamic);
        let (b, _) = domino_pp_loss(&scores, &truth, Some(&w), clock, &LossMode::dominopp(), &mut st).unwrap();
        assert_eq!(b.beta, 0.0);
        assert_eq!(b.total, dice_ce(&scores, &truth).unwrap().value);
    }

    #[test]
    fn perfect_prediction_is_zero() {
        let (s, t) = one_hot_case();
        let w = figure2_fixture();
        for e in 1..=3 {
            let mut st = ScaleState::new(ScalePolicy::Dynamic);
            let clock = TrainingClock::new(e, 3).unwrap();
            let (b, _) = domino_pp_loss(&s, &t, Some(&w), clock, &LossMode::dominopp(), &mut st).unwrap();
            assert!(b.total.abs() < 1e-4, "{b:?}");
        }
    }

    #[test]
    fn breakdown_arithmetic() {
        // standard 0.8, reg 0.1, beta 0.5, s 1 -> 0.45
        let total = (1.0 - 0.5) * 0.8 + 0.5 * Scale::ONE.value() * 0.1;
        assert!((total - 0.45).abs() < 1e-12);
    }

    #[test]
    fn regularized_modes_need_a_matrix() {
        let (s, t) = one_hot_case();
        let clock = TrainingClock::new(1, 3).unwrap();
        let mut st = ScaleState::new(ScalePolicy::Dynamic);
        assert!(domino_pp_loss(&s, &t, None, clock, &LossMode::dominopp(), &mut st).is_err());
        assert!(domino_pp_loss(&s, &t, None, clock, &LossMode::baseline(), &mut st).is_ok());
    }

    #[test]
    fn mode_weights() {
        assert_eq!(LossMode::dominopp().data_weight(0.25), 0.75);
        let no_r = LossMode {
            use_decaying_beta: false,
            ..LossMode::dominopp()
        };
        assert_eq!(no_r.data_weight(1.0), 1.0);
        assert_eq!(LossMode::domino_eq1().scale_policy(), ScalePolicy::FirstEpoch);
        assert_eq!(LossMode::dominopp().scale_policy(), ScalePolicy::Dynamic);
    }
}
