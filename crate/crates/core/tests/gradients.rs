mod common;

use common::*;
use penreg::loss::{
    cross_entropy, dice_ce, domino_eq1_loss, domino_pp_loss, domino_reg, soft_dice_loss, LossMode, Scale, ScaleState,
    TrainingClock,
};
use penreg::model::softmax_backward;
use penreg::{LabelMap, Tensor3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn with_data(scores: &Tensor3, data: &[f64]) -> Tensor3 {
    Tensor3::from_vec(scores.height, scores.width, scores.channels, data.to_vec()).unwrap()
}

/// FD check of a scores -> (value, grad) function on random instances.
fn check_scores_grad(name: &str, f: impl Fn(&Tensor3, &LabelMap) -> (f64, Tensor3)) {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for trial in 0..25 {
        let (h, w, n) = (rng.random_range(1..=8), rng.random_range(1..=8), rng.random_range(2..=5));
        let scores = random_scores(&mut rng, h, w, n);
        let truth = random_labels(&mut rng, h, w, n);
        let (_, grad) = f(&scores, &truth);
        let numeric = central_diff(&scores.data, FD_STEP, |d| f(&with_data(&scores, d), &truth).0);
        let err = max_rel_err(&grad.data, &numeric);
        assert!(err < FD_TOL, "{name} trial {trial}: max rel err {err:e}");
    }
}

#[test]
fn cross_entropy_gradient() {
    check_scores_grad("ce", |s, t| {
        let v = cross_entropy(s, t).unwrap();
        (v.value, v.grad)
    });
}

#[test]
fn soft_dice_gradient() {
    check_scores_grad("dice", |s, t| {
        let v = soft_dice_loss(s, t).unwrap();
        (v.value, v.grad)
    });
}

#[test]
fn dice_ce_gradient_and_sum() {
    check_scores_grad("dice_ce", |s, t| {
        let v = dice_ce(s, t).unwrap();
        let sum = cross_entropy(s, t).unwrap().value + soft_dice_loss(s, t).unwrap().value;
        assert!((v.value - sum).abs() < 1e-12);
        (v.value, v.grad)
    });
}

#[test]
fn regularizer_gradient_and_value() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let w5 = random_penalty(&mut rng, 5);
    check_scores_grad("reg", |s, t| {
        let n = s.channels;
        let w = if n == 5 { w5.clone() } else { random_penalty(&mut ChaCha8Rng::seed_from_u64(n as u64), n) };
        let v = domino_reg(s, t, &w).unwrap();
        // Naive double sum.
        let mut naive = 0.0;
        for p in 0..s.pixels() {
            let y = t.labels[p] as usize;
            for j in 0..n {
                naive += w.get(y, j) * s.pixel(p)[j];
            }
        }
        naive /= s.pixels() as f64;
        assert!((v.value - naive).abs() < 1e-12);
        (v.value, v.grad)
    });
}

#[test]
fn composite_gradients() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for trial in 0..25 {
        let (h, w, n) = (rng.random_range(1..=8), rng.random_range(1..=8), rng.random_range(2..=5));
        let scores = random_scores(&mut rng, h, w, n);
        let truth = random_labels(&mut rng, h, w, n);
        let pen = random_penalty(&mut rng, n);
        let beta = rng.random_range(0.0..=1.0);
        let scale = Scale { exponent: rng.random_range(-2..=2) };
        let (_, g) = domino_eq1_loss(&scores, &truth, &pen, beta, scale).unwrap();
        let num = central_diff(&scores.data, FD_STEP, |d| {
            domino_eq1_loss(&with_data(&scores, d), &truth, &pen, beta, scale).unwrap().0.total
        });
        assert!(max_rel_err(&g.data, &num) < FD_TOL, "eq1 trial {trial}");

        let total = rng.random_range(1..=10);
        let clock = TrainingClock::new(rng.random_range(1..=total), total).unwrap();
        let mode = LossMode::dominopp();
        let run = |s: &Tensor3| {
            let mut st = ScaleState::new(mode.scale_policy());
            domino_pp_loss(s, &truth, Some(&pen), clock, &mode, &mut st).unwrap()
        };
        let (b, g) = run(&scores);
        let expect = (1.0 - b.beta) * b.standard + b.beta * b.scale.value() * b.reg_raw;
        assert!((b.total - expect).abs() < 1e-12, "breakdown identity");
        let num = central_diff(&scores.data, FD_STEP, |d| run(&with_data(&scores, d)).0.total);
        assert!(max_rel_err(&g.data, &num) < FD_TOL, "dominopp trial {trial}");
    }
}

#[test]
fn softmax_chain_rule() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..20 {
        let (h, w, n) = (rng.random_range(1..=5), rng.random_range(1..=5), rng.random_range(2..=5));
        let logits = Tensor3::from_vec(h, w, n, (0..h * w * n).map(|_| rng.random_range(-3.0..3.0)).collect()).unwrap();
        let truth = random_labels(&mut rng, h, w, n);
        let f = |z: &Tensor3| dice_ce(&penreg::model::softmax_map(z).unwrap(), &truth).unwrap();
        let p = penreg::model::softmax_map(&logits).unwrap();
        let gz = softmax_backward(&p, &f(&logits).grad);
        let num = central_diff(&logits.data, FD_STEP, |d| f(&with_data(&logits, d)).value);
        assert!(max_rel_err(&gz.data, &num) < FD_TOL);
    }
}

#[test]
fn full_objective_wrt_parameters() {
    for seed in 0..12 {
        let err = model_fd_trial(1000 + seed);
        assert!(err < FD_TOL, "seed {seed}: max rel err {err:e}");
    }
}

#[test]
fn zero_penalty_leaves_weighted_data_term() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let n = 4;
    let scores = random_scores(&mut rng, 5, 5, n);
    let truth = random_labels(&mut rng, 5, 5, n);
    let zero = penreg::penalty::PenaltyMatrix::uniform(class_set(n), 0.0, penreg::penalty::Provenance::File).unwrap();
    let mode = LossMode::dominopp();
    for e in 1..=6 {
        let clock = TrainingClock::new(e, 6).unwrap();
        let mut st = ScaleState::new(mode.scale_policy());
        let (b, _) = domino_pp_loss(&scores, &truth, Some(&zero), clock, &mode, &mut st).unwrap();
        let dce = dice_ce(&scores, &truth).unwrap().value;
        assert!((b.total - (1.0 - b.beta) * dce).abs() < 1e-12);
    }
}
