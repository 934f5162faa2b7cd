//! Losses and their gradients with respect to class probabilities.
//!
//! Every loss returns a [`LossValue`]: the scalar and its gradient with the
//! shape of the score map. Chain through
//! [`softmax_backward`](crate::model::softmax_backward) for gradients with
//! respect to pre-softmax logits.

mod base;
mod composite;
mod regularizer;
mod schedule;

pub use base::{cross_entropy, dice_ce, soft_dice_loss, CE_EPS, DICE_EPS};
pub use composite::{domino_eq1_loss, domino_pp_loss, LossBreakdown, LossMode, LossVariant};
pub use regularizer::domino_reg;
pub use schedule::{beta_at, dynamic_scale, Scale, ScalePolicy, ScaleState, TrainingClock, SCALE_FLOOR};

use crate::grid::Tensor3;

/// A scalar loss and its gradient w.r.t. the scores it was computed from.
#[derive(Debug, Clone, PartialEq)]
pub struct LossValue {
    pub value: f64,
    pub grad: Tensor3,
}

impl LossValue {
    pub(crate) fn add(mut self, other: &LossValue) -> LossValue {
        self.value += other.value;
        for (a, b) in self.grad.data.iter_mut().zip(&other.grad.data) {
            *a += b;
        }
        self
    }
}
