//! The penalty-weighted misclassification term `y^T W ŷ`, averaged over pixels.

use super::LossValue;
use crate::error::{Error, Result};
use crate::grid::{check_scores_vs_labels, LabelMap, ScoreMap, Tensor3};
use crate::penalty::PenaltyMatrix;

/// `(1/P) Σ_p Σ_j W[truth_p][j] · scores_pj`. The gradient at `(p, j)` is
/// `W[truth_p][j] / P`.
pub fn domino_reg(scores: &ScoreMap, truth: &LabelMap, w: &PenaltyMatrix) -> Result<LossValue> {
    check_scores_vs_labels(scores, truth)?;
    if w.n() != scores.channels {
        return Err(Error::DimensionMismatch(format!(
            "penalty matrix is {0}x{0} but scores have {1} classes",
            w.n(),
            scores.channels
        )));
    }
    let inv = 1.0 / scores.pixels() as f64;
    let mut grad = Tensor3::zeros(scores.height, scores.width, scores.channels);
    let mut total = 0.0;
    for (p, &t) in truth.labels.iter().enumerate() {
        let row = w.row(t as usize);
        total += row.iter().zip(scores.pixel(p)).map(|(a, b)| a * b).sum::<f64>();
        for (g, &wv) in grad.pixel_mut(p).iter_mut().zip(row) {
            *g = wv * inv;
        }
    }
    Ok(LossValue { value: total * inv, grad })
}
