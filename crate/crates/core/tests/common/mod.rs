//! Reference implementations for the test suites: finite differences and
//! brute-force metric and penalty oracles. Deliberately naive.
#![allow(dead_code)]

use penreg::grid::{LabelMap, Tensor3};
use penreg::penalty::{ClassSet, PenaltyMatrix, Provenance};
use rand::Rng;

pub const FD_STEP: f64 = 1e-5;
pub const FD_TOL: f64 = 1e-4;

/// `|a - n| / max(|a|, |n|, 1e-6)`; the floor keeps round-off on
/// near-zero entries from reading as a large relative error.
pub fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6)
}

/// Central difference of `f` along every coordinate of `x`.
pub fn central_diff(x: &[f64], step: f64, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = probe[i];
            probe[i] = orig + step;
            let up = f(&probe);
            probe[i] = orig - step;
            let down = f(&probe);
            probe[i] = orig;
            (up - down) / (2.0 * step)
        })
        .collect()
}

pub fn max_rel_err(analytic: &[f64], numeric: &[f64]) -> f64 {
    assert_eq!(analytic.len(), numeric.len());
    analytic.iter().zip(numeric).map(|(&a, &n)| rel_err(a, n)).fold(0.0, f64::max)
}

pub fn class_set(n: usize) -> ClassSet {
    ClassSet::new((0..n).map(|i| format!("c{i}"))).unwrap()
}

pub fn random_labels<R: Rng>(rng: &mut R, h: usize, w: usize, n: usize) -> LabelMap {
    LabelMap::from_vec(h, w, (0..h * w).map(|_| rng.random_range(0..n) as u8).collect()).unwrap()
}

/// Strictly positive per-pixel distributions.
pub fn random_scores<R: Rng>(rng: &mut R, h: usize, w: usize, n: usize) -> Tensor3 {
    let mut data = Vec::with_capacity(h * w * n);
    for _ in 0..h * w {
        let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
        let s: f64 = raw.iter().sum();
        data.extend(raw.iter().map(|v| v / s));
    }
    Tensor3::from_vec(h, w, n, data).unwrap()
}

pub fn random_penalty<R: Rng>(rng: &mut R, n: usize) -> PenaltyMatrix {
    let values = (0..n * n)
        .map(|k| if k / n == k % n { 0.0 } else { rng.random_range(0.0..=1.0) })
        .collect();
    PenaltyMatrix::new(class_set(n), values, Provenance::File).unwrap()
}

/// Per-row division, complement, zero diagonal; a row with no counts
/// becomes all ones off the diagonal.
pub fn brute_cm_penalty(counts: &[u64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        let total: u64 = counts[i * n..(i + 1) * n].iter().sum();
        for j in 0..n {
            if i == j {
                continue;
            }
            out[i * n + j] = if total == 0 {
                1.0
            } else {
                1.0 - counts[i * n + j] as f64 / total as f64
            };
        }
    }
    out
}

pub fn points(m: &LabelMap, c: u8) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for y in 0..m.height {
        for x in 0..m.width {
            if m.get(y, x) == c {
                out.push((y as f64, x as f64));
            }
        }
    }
    out
}

pub fn brute_dice(pred: &LabelMap, truth: &LabelMap, c: u8) -> f64 {
    let a = points(pred, c);
    let b = points(truth, c);
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    let both = a.iter().filter(|p| b.contains(p)).count();
    2.0 * both as f64 / (a.len() + b.len()) as f64
}

/// All-pairs directed distances `d(a, B)` for each `a` in `A`.
fn directed(a: &[(f64, f64)], b: &[(f64, f64)]) -> Vec<f64> {
    a.iter()
        .map(|p| b.iter().map(|q| ((p.0 - q.0).powi(2) + (p.1 - q.1).powi(2)).sqrt()).fold(f64::INFINITY, f64::min))
        .collect()
}

/// `(classic_max, modified_mean)`, or `None` if either set is empty.
pub fn brute_hausdorff(pred: &LabelMap, truth: &LabelMap, c: u8) -> Option<(f64, f64)> {
    let a = points(pred, c);
    let b = points(truth, c);
    if a.is_empty() || b.is_empty() {
        return None;
    }
    let ab = directed(&a, &b);
    let ba = directed(&b, &a);
    let max = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    Some((max(&ab).max(max(&ba)), mean(&ab).max(mean(&ba))))
}

/// Random label pair over classes {0, 1}, at most 16x16, with independent
/// class-1 densities below 0.6 (so empty masks occur).
pub fn random_mask_pair<R: Rng>(rng: &mut R) -> (LabelMap, LabelMap) {
    let h = rng.random_range(1..=16);
    let w = rng.random_range(1..=16);
    let p = rng.random_range(0.0..0.6);
    let q = rng.random_range(0.0..0.6);
    let a = (0..h * w).map(|_| rng.random_bool(p) as u8).collect();
    let b = (0..h * w).map(|_| rng.random_bool(q) as u8).collect();
    (LabelMap::from_vec(h, w, a).unwrap(), LabelMap::from_vec(h, w, b).unwrap())
}

pub fn flatten<P: penreg::model::ParamSet>(p: &P) -> Vec<f64> {
    p.tensors().concat()
}

pub fn unflatten<P: penreg::model::ParamSet>(p: &mut P, flat: &[f64]) {
    let mut off = 0;
    for t in p.tensors_mut() {
        let n = t.len();
        t.copy_from_slice(&flat[off..off + n]);
        off += n;
    }
    assert_eq!(off, flat.len());
}

/// Full training objective for one sample as a function of the flat
/// parameter vector, with a fresh scale state. Returns `(total, dθ)`.
pub fn objective_and_grad(
    params: &penreg::model::ModelParams,
    image: &Tensor3,
    truth: &LabelMap,
    w: Option<&PenaltyMatrix>,
    clock: penreg::loss::TrainingClock,
    mode: &penreg::loss::LossMode,
) -> (f64, Vec<f64>) {
    use penreg::loss::{domino_pp_loss, ScaleState};
    use penreg::model::{backward, forward, softmax_backward, softmax_map};
    let (logits, cache) = forward(params, image).unwrap();
    let probs = softmax_map(&logits).unwrap();
    let mut state = ScaleState::new(mode.scale_policy());
    let (b, gp) = domino_pp_loss(&probs, truth, w, clock, mode, &mut state).unwrap();
    let gz = softmax_backward(&probs, &gp);
    (b.total, flatten(&backward(params, &cache, &gz).unwrap()))
}

pub fn objective(
    params: &penreg::model::ModelParams,
    image: &Tensor3,
    truth: &LabelMap,
    w: Option<&PenaltyMatrix>,
    clock: penreg::loss::TrainingClock,
    mode: &penreg::loss::LossMode,
) -> f64 {
    use penreg::loss::{domino_pp_loss, ScaleState};
    use penreg::model::{forward, softmax_map};
    let (logits, _) = forward(params, image).unwrap();
    let probs = softmax_map(&logits).unwrap();
    let mut state = ScaleState::new(mode.scale_policy());
    domino_pp_loss(&probs, truth, w, clock, mode, &mut state).unwrap().0.total
}

/// One random instance of the full objective's parameter gradient check:
/// image up to 8x8, N in 2..=5, random zero-diagonal W, random clock and
/// loss flags. Returns the max relative error over all parameters.
pub fn model_fd_trial(seed: u64) -> f64 {
    use penreg::loss::{LossMode, LossVariant, TrainingClock};
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let h = rng.random_range(3..=8);
    let w = rng.random_range(3..=8);
    let n = rng.random_range(2..=5);
    let f = rng.random_range(1..=3);
    let image = Tensor3::from_vec(h, w, 1, (0..h * w).map(|_| rng.random_range(0.0..1.0)).collect()).unwrap();
    let truth = random_labels(&mut rng, h, w, n);
    let pen = random_penalty(&mut rng, n);
    let total = rng.random_range(1..=20);
    let clock = TrainingClock::new(rng.random_range(1..=total), total).unwrap();
    let mode = LossMode {
        variant: [LossVariant::Baseline, LossVariant::DominoEq1, LossVariant::DominoppEq2][rng.random_range(0..3)],
        use_hccm: true,
        use_dynamic_scale: rng.random_bool(0.5),
        use_decaying_beta: rng.random_bool(0.7),
        constant_beta: rng.random_range(0.0..=1.0),
    };
    let mut params = penreg::model::init_params(rng.random(), f, n).unwrap();
    // Zero biases put exact ReLU kinks wherever a window is all zero; random
    // biases keep the instance at a differentiable point.
    for b in [&mut params.conv1.bias, &mut params.conv2.bias, &mut params.head.bias] {
        b.iter_mut().for_each(|v| *v = rng.random_range(-0.2..0.2));
    }
    let (_, analytic) = objective_and_grad(&params, &image, &truth, Some(&pen), clock, &mode);
    let x = flatten(&params);
    let mut probe = params.clone();
    let numeric = central_diff(&x, FD_STEP, |v| {
        unflatten(&mut probe, v);
        objective(&probe, &image, &truth, Some(&pen), clock, &mode)
    });
    max_rel_err(&analytic, &numeric)
}
