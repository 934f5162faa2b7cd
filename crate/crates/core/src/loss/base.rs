//! DiceCE: cross-entropy plus soft Dice, with gradients w.r.t. probabilities.

use super::LossValue;
use crate::error::Result;
use crate::grid::{check_scores_vs_labels, LabelMap, ScoreMap, Tensor3};

/// Log guard for cross-entropy.
pub const CE_EPS: f64 = 1e-12;
/// Smoothing term in the soft Dice ratio.
pub const DICE_EPS: f64 = 1e-5;

/// Mean over pixels of `-ln(p_true + CE_EPS)`.
pub fn cross_entropy(scores: &ScoreMap, truth: &LabelMap) -> Result<LossValue> {
    check_scores_vs_labels(scores, truth)?;
    let pixels = scores.pixels() as f64;
    let mut grad = Tensor3::zeros(scores.height, scores.width, scores.channels);
    let mut total = 0.0;
    for (p, &t) in truth.labels.iter().enumerate() {
        let q = scores.pixel(p)[t as usize] + CE_EPS;
        total -= q.ln();
        grad.pixel_mut(p)[t as usize] = -1.0 / (q * pixels);
    }
    Ok(LossValue {
        value: total / pixels,
        grad,
    })
}

/// `1 - mean_c (2 I_c + eps) / (S_c + G_c + eps)` where `I_c` is the soft
/// intersection, `S_c` the score mass and `G_c` the true pixel count.
pub fn soft_dice_loss(scores: &ScoreMap, truth: &LabelMap) -> Result<LossValue> {
    check_scores_vs_labels(scores, truth)?;
    let n = scores.channels;
    let mut inter = vec![0.0; n];
    let mut mass = vec![0.0; n];
    let mut count = vec![0.0; n];
    for (p, &t) in truth.labels.iter().enumerate() {
        let px = scores.pixel(p);
        for (c, &s) in px.iter().enumerate() {
            mass[c] += s;
        }
        inter[t as usize] += px[t as usize];
        count[t as usize] += 1.0;
    }

    let mut ratio_sum = 0.0;
    // d ratio_c / d s_pc = (2 g_pc D_c - (2 I_c + eps)) / D_c^2
    let mut d_on = vec![0.0; n];
    let mut d_off = vec![0.0; n];
    for c in 0..n {
        let num = 2.0 * inter[c] + DICE_EPS;
        let den = mass[c] + count[c] + DICE_EPS;
        ratio_sum += num / den;
        d_off[c] = -num / (den * den);
        d_on[c] = 2.0 / den + d_off[c];
    }
    let scale = -1.0 / n as f64;
    let mut grad = Tensor3::zeros(scores.height, scores.width, n);
    for (p, &t) in truth.labels.iter().enumerate() {
        let g = grad.pixel_mut(p);
        for c in 0..n {
            g[c] = scale * if c == t as usize { d_on[c] } else { d_off[c] };
        }
    }
    Ok(LossValue {
        value: 1.0 - ratio_sum / n as f64,
        grad,
    })
}

/// Equally weighted sum of [`cross_entropy`] and [`soft_dice_loss`].
pub fn dice_ce(scores: &ScoreMap, truth: &LabelMap) -> Result<LossValue> {
    let ce = cross_entropy(scores, truth)?;
    let dice = soft_dice_loss(scores, truth)?;
    Ok(ce.add(&dice))
}
