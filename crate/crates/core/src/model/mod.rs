//! A small per-pixel segmentation network with hand-written reverse mode.
//!
//! `conv3x3 → ReLU → conv3x3 → ReLU → conv1x1`, zero "same" padding, double
//! precision. Each logit sees a 5×5 input neighborhood.

mod adam;
mod checkpoint;
mod conv;

pub use adam::{adam_step, AdamConfig, AdamState, ParamSet};
pub use checkpoint::{decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint, CHECKPOINT_VERSION};
pub use conv::ConvLayer;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{LabelMap, ScoreMap, Tensor3};

/// Network weights. Also used for parameter gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub conv1: ConvLayer,
    pub conv2: ConvLayer,
    pub head: ConvLayer,
}

pub type ParamGrads = ModelParams;

/// Activations retained for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    pub input: Tensor3,
    pub pre1: Tensor3,
    pub act1: Tensor3,
    pub pre2: Tensor3,
    pub act2: Tensor3,
}

impl ModelParams {
    pub fn zeros(in_channels: usize, features: usize, classes: usize) -> Self {
        Self {
            conv1: ConvLayer::zeros(3, in_channels, features),
            conv2: ConvLayer::zeros(3, features, features),
            head: ConvLayer::zeros(1, features, classes),
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.in_channels(), self.features(), self.classes())
    }

    pub fn in_channels(&self) -> usize {
        self.conv1.in_channels
    }

    pub fn features(&self) -> usize {
        self.conv1.out_channels
    }

    pub fn classes(&self) -> usize {
        self.head.out_channels
    }

    pub fn layers(&self) -> [&ConvLayer; 3] {
        [&self.conv1, &self.conv2, &self.head]
    }

    pub fn all_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|v| v.is_finite()))
    }
}

impl ParamSet for ModelParams {
    fn tensors(&self) -> Vec<&[f64]> {
        vec![
            &self.conv1.weight,
            &self.conv1.bias,
            &self.conv2.weight,
            &self.conv2.bias,
            &self.head.weight,
            &self.head.bias,
        ]
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        vec![
            &mut self.conv1.weight,
            &mut self.conv1.bias,
            &mut self.conv2.weight,
            &mut self.conv2.bias,
            &mut self.head.weight,
            &mut self.head.bias,
        ]
    }
}

/// Single-channel input, `features` hidden channels, `classes` outputs.
pub fn init_params(seed: u64, features: usize, classes: usize) -> Result<ModelParams> {
    init_params_with_input(seed, 1, features, classes)
}

pub fn init_params_with_input(seed: u64, in_channels: usize, features: usize, classes: usize) -> Result<ModelParams> {
    if features == 0 || classes < 2 || in_channels == 0 {
        return Err(Error::Config(format!(
            "model needs >= 1 input channel, >= 1 feature and >= 2 classes (got {in_channels}, {features}, {classes})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(ModelParams {
        conv1: ConvLayer::glorot(3, in_channels, features, &mut rng),
        conv2: ConvLayer::glorot(3, features, features, &mut rng),
        head: ConvLayer::glorot(1, features, classes, &mut rng),
    })
}

fn relu(t: &Tensor3) -> Tensor3 {
    Tensor3 {
        data: t.data.iter().map(|&v| v.max(0.0)).collect(),
        ..*t
    }
}

/// Runs the network; returns per-pixel logits and the activation cache.
pub fn forward(params: &ModelParams, image: &Tensor3) -> Result<(Tensor3, ForwardCache)> {
    if image.height < 3 || image.width < 3 {
        return Err(Error::DimensionMismatch(format!(
            "image is {}x{}, need at least 3x3",
            image.height, image.width
        )));
    }
    if image.channels != params.in_channels() {
        return Err(Error::DimensionMismatch(format!(
            "image has {} channels, model expects {}",
            image.channels,
            params.in_channels()
        )));
    }
    let pre1 = params.conv1.forward(image);
    let act1 = relu(&pre1);
    let pre2 = params.conv2.forward(&act1);
    let act2 = relu(&pre2);
    let logits = params.head.forward(&act2);
    let cache = ForwardCache {
        input: image.clone(),
        pre1,
        act1,
        pre2,
        act2,
    };
    Ok((logits, cache))
}

fn relu_backward(grad: Option<Tensor3>, pre: &Tensor3) -> Tensor3 {
    let mut g = grad.expect("input gradient requested");
    for (gv, &z) in g.data.iter_mut().zip(&pre.data) {
        if z <= 0.0 {
            *gv = 0.0;
        }
    }
    g
}

/// Reverse-mode gradients of a scalar whose gradient w.r.t. the logits is
/// `grad_logits`.
pub fn backward(params: &ModelParams, cache: &ForwardCache, grad_logits: &Tensor3) -> Result<ParamGrads> {
    let expect = (cache.act2.height, cache.act2.width, params.classes());
    if (grad_logits.height, grad_logits.width, grad_logits.channels) != expect {
        return Err(Error::DimensionMismatch(format!(
            "logit gradient is {}x{}x{}, expected {}x{}x{}",
            grad_logits.height, grad_logits.width, grad_logits.channels, expect.0, expect.1, expect.2
        )));
    }
    let mut grads = params.zeros_like();
    let g_act2 = params.head.backward(&cache.act2, grad_logits, &mut grads.head, true);
    let g_pre2 = relu_backward(g_act2, &cache.pre2);
    let g_act1 = params.conv2.backward(&cache.act1, &g_pre2, &mut grads.conv2, true);
    let g_pre1 = relu_backward(g_act1, &cache.pre1);
    params.conv1.backward(&cache.input, &g_pre1, &mut grads.conv1, false);
    Ok(grads)
}

/// Per-pixel softmax with max subtraction.
pub fn softmax_map(logits: &Tensor3) -> Result<ScoreMap> {
    if let Some(k) = logits.data.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!(
            "logit {} at pixel {} is not finite",
            logits.data[k],
            k / logits.channels
        )));
    }
    let mut out = logits.clone();
    for p in 0..out.pixels() {
        let px = out.pixel_mut(p);
        let max = px.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in px.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in px.iter_mut() {
            *v /= sum;
        }
    }
    Ok(out)
}

/// Chains a gradient w.r.t. probabilities through the softmax:
/// `g_z = p ⊙ (g_p - <p, g_p>)` per pixel.
pub fn softmax_backward(probs: &ScoreMap, grad_probs: &Tensor3) -> Tensor3 {
    let mut out = grad_probs.clone();
    for p in 0..probs.pixels() {
        let pr = probs.pixel(p);
        let g = out.pixel_mut(p);
        let dot: f64 = pr.iter().zip(g.iter()).map(|(a, b)| a * b).sum();
        for (gv, &pv) in g.iter_mut().zip(pr) {
            *gv = pv * (*gv - dot);
        }
    }
    out
}

/// Per-pixel argmax of a score map; ties go to the lowest class index.
pub fn argmax_labels(scores: &ScoreMap) -> LabelMap {
    let labels = (0..scores.pixels())
        .map(|p| {
            let px = scores.pixel(p);
            let mut best = 0;
            for (c, &v) in px.iter().enumerate().skip(1) {
                if v > px[best] {
                    best = c;
                }
            }
            best as u8
        })
        .collect();
    LabelMap {
        height: scores.height,
        width: scores.width,
        labels,
    }
}

pub fn predict(params: &ModelParams, image: &Tensor3) -> Result<LabelMap> {
    let (logits, _) = forward(params, image)?;
    Ok(argmax_labels(&softmax_map(&logits)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn image(h: usize, w: usize, seed: u64) -> Tensor3 {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Tensor3::from_vec(h, w, 1, (0..h * w).map(|_| rng.random::<f64>()).collect()).unwrap()
    }

    #[test]
    fn init_is_deterministic_with_zero_bias() {
        let a = init_params(3, 8, 12).unwrap();
        assert_eq!(a, init_params(3, 8, 12).unwrap());
        assert_ne!(a, init_params(4, 8, 12).unwrap());
        for layer in a.layers() {
            assert!(layer.bias.iter().all(|&b| b == 0.0));
            let bound = layer.init_bound();
            assert!(layer.weight.iter().all(|w| w.abs() <= bound));
            let spread = layer.weight.iter().fold(0.0f64, |m, w| m.max(w.abs()));
            assert!(spread > 0.5 * bound);
        }
        assert!(init_params(0, 0, 3).is_err());
        assert!(init_params(0, 2, 1).is_err());
    }

    #[test]
    fn zero_model_gives_zero_logits() {
        let p = ModelParams::zeros(1, 4, 3);
        let (logits, _) = forward(&p, &Tensor3::zeros(5, 7, 1)).unwrap();
        assert_eq!((logits.height, logits.width, logits.channels), (5, 7, 3));
        assert!(logits.data.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn too_small_image_rejected() {
        let p = ModelParams::zeros(1, 2, 2);
        assert!(forward(&p, &Tensor3::zeros(2, 8, 1)).is_err());
    }

    #[test]
    fn receptive_field_is_5x5() {
        let p = init_params(11, 4, 3).unwrap();
        let img = image(11, 11, 1);
        let (base, _) = forward(&p, &img).unwrap();
        let mut bumped = img.clone();
        bumped.set(5, 5, 0, img.get(5, 5, 0) + 10.0);
        let (out, _) = forward(&p, &bumped).unwrap();
        for y in 0..11 {
            for x in 0..11 {
                let changed = (0..3).any(|c| out.get(y, x, c) != base.get(y, x, c));
                let inside = (y as isize - 5).abs() <= 2 && (x as isize - 5).abs() <= 2;
                if !inside {
                    assert!(!changed, "logit at ({y},{x}) moved");
                }
            }
        }
        assert!((0..3).any(|c| out.get(5, 5, c) != base.get(5, 5, c)));
    }

    #[test]
    fn softmax_cases() {
        let s = softmax_map(&Tensor3::from_vec(1, 1, 2, vec![0.0, 0.0]).unwrap()).unwrap();
        assert_eq!(s.data, vec![0.5, 0.5]);
        let s = softmax_map(&Tensor3::from_vec(1, 1, 2, vec![1000.0, 0.0]).unwrap()).unwrap();
        assert!((s.data[0] - 1.0).abs() < 1e-12 && s.data[1] < 1e-300);
        let a = softmax_map(&Tensor3::from_vec(1, 1, 3, vec![0.3, -1.2, 2.0]).unwrap()).unwrap();
        let b = softmax_map(&Tensor3::from_vec(1, 1, 3, vec![7.3, 5.8, 9.0]).unwrap()).unwrap();
        for (x, y) in a.data.iter().zip(&b.data) {
            assert!((x - y).abs() < 1e-12);
        }
        assert!(softmax_map(&Tensor3::from_vec(1, 1, 2, vec![f64::NAN, 0.0]).unwrap()).is_err());
    }

    #[test]
    fn argmax_tie_breaks_low() {
        let logits = Tensor3::from_vec(1, 2, 6, vec![0.0, 1.0, 3.0, 0.0, 0.0, 3.0, 5.0, 1.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let labels = argmax_labels(&softmax_map(&logits).unwrap());
        assert_eq!(labels.labels, vec![2, 0]);
    }

    #[test]
    fn zero_upstream_gives_zero_grads() {
        let p = init_params(5, 3, 4).unwrap();
        let (logits, cache) = forward(&p, &image(6, 6, 2)).unwrap();
        let g = backward(&p, &cache, &Tensor3::zeros(6, 6, logits.channels)).unwrap();
        assert!(g.tensors().iter().all(|t| t.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn backward_is_linear() {
        use rand::Rng;
        let p = init_params(5, 3, 4).unwrap();
        let (_, cache) = forward(&p, &image(6, 6, 2)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut g1 = Tensor3::zeros(6, 6, 4);
        let mut g2 = Tensor3::zeros(6, 6, 4);
        g1.data.iter_mut().for_each(|v| *v = rng.random_range(-1.0..1.0));
        g2.data.iter_mut().for_each(|v| *v = rng.random_range(-1.0..1.0));
        let mut g12 = g1.clone();
        g12.data.iter_mut().zip(&g2.data).for_each(|(a, b)| *a += b);
        let a = backward(&p, &cache, &g1).unwrap();
        let b = backward(&p, &cache, &g2).unwrap();
        let ab = backward(&p, &cache, &g12).unwrap();
        for ((x, y), z) in a.tensors().iter().zip(b.tensors()).zip(ab.tensors()) {
            for k in 0..x.len() {
                assert!((x[k] + y[k] - z[k]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn backward_rejects_bad_shape() {
        let p = init_params(5, 3, 4).unwrap();
        let (_, cache) = forward(&p, &image(6, 6, 2)).unwrap();
        assert!(backward(&p, &cache, &Tensor3::zeros(6, 6, 3)).is_err());
    }
}
