//! Zero-padded "same" convolutions with square kernels of odd size.

use rand::Rng;

use crate::grid::Tensor3;

/// Weights are stored `[ky][kx][in][out]` so the innermost loop runs over
/// output channels.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvLayer {
    pub kernel: usize,
    pub in_channels: usize,
    pub out_channels: usize,
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

impl ConvLayer {
    pub fn zeros(kernel: usize, in_channels: usize, out_channels: usize) -> Self {
        assert!(kernel % 2 == 1, "kernel size must be odd");
        Self {
            kernel,
            in_channels,
            out_channels,
            weight: vec![0.0; kernel * kernel * in_channels * out_channels],
            bias: vec![0.0; out_channels],
        }
    }

    /// Glorot-uniform weights, zero biases.
    pub fn glorot<R: Rng>(kernel: usize, in_channels: usize, out_channels: usize, rng: &mut R) -> Self {
        let mut layer = Self::zeros(kernel, in_channels, out_channels);
        let bound = layer.init_bound();
        for w in &mut layer.weight {
            *w = rng.random_range(-bound..bound);
        }
        layer
    }

    /// `sqrt(6 / (fan_in + fan_out))`.
    pub fn init_bound(&self) -> f64 {
        let area = (self.kernel * self.kernel) as f64;
        let fan_in = area * self.in_channels as f64;
        let fan_out = area * self.out_channels as f64;
        (6.0 / (fan_in + fan_out)).sqrt()
    }

    #[inline]
    fn widx(&self, ky: usize, kx: usize, i: usize, o: usize) -> usize {
        ((ky * self.kernel + kx) * self.in_channels + i) * self.out_channels + o
    }

    pub fn forward(&self, input: &Tensor3) -> Tensor3 {
        debug_assert_eq!(input.channels, self.in_channels);
        let (h, w) = (input.height, input.width);
        let co = self.out_channels;
        let r = (self.kernel / 2) as isize;
        let mut out = Tensor3::zeros(h, w, co);
        for y in 0..h {
            for x in 0..w {
                let p = y * w + x;
                let acc = &mut out.data[p * co..(p + 1) * co];
                acc.copy_from_slice(&self.bias);
                for ky in 0..self.kernel {
                    let sy = y as isize + ky as isize - r;
                    if sy < 0 || sy >= h as isize {
                        continue;
                    }
                    for kx in 0..self.kernel {
                        let sx = x as isize + kx as isize - r;
                        if sx < 0 || sx >= w as isize {
                            continue;
                        }
                        let src = input.pixel(sy as usize * w + sx as usize);
                        for (i, &xv) in src.iter().enumerate() {
                            if xv == 0.0 {
                                continue;
                            }
                            let base = self.widx(ky, kx, i, 0);
                            let wrow = &self.weight[base..base + co];
                            for (a, &wv) in acc.iter_mut().zip(wrow) {
                                *a += xv * wv;
                            }
                        }
                    }
                }
            }
        }
        out
    }

    /// Accumulates weight/bias gradients into `grads` and returns the
    /// gradient w.r.t. `input` when `want_input` is set.
    pub fn backward(&self, input: &Tensor3, grad_out: &Tensor3, grads: &mut ConvLayer, want_input: bool) -> Option<Tensor3> {
        let (h, w) = (input.height, input.width);
        let co = self.out_channels;
        let r = (self.kernel / 2) as isize;
        let mut grad_in = want_input.then(|| Tensor3::zeros(h, w, self.in_channels));
        for y in 0..h {
            for x in 0..w {
                let p = y * w + x;
                let g = grad_out.pixel(p);
                if g.iter().all(|&v| v == 0.0) {
                    continue;
                }
                for (b, &gv) in grads.bias.iter_mut().zip(g) {
                    *b += gv;
                }
                for ky in 0..self.kernel {
                    let sy = y as isize + ky as isize - r;
                    if sy < 0 || sy >= h as isize {
                        continue;
                    }
                    for kx in 0..self.kernel {
                        let sx = x as isize + kx as isize - r;
                        if sx < 0 || sx >= w as isize {
                            continue;
                        }
                        let sp = sy as usize * w + sx as usize;
                        let src = input.pixel(sp);
                        for (i, &xv) in src.iter().enumerate() {
                            let base = self.widx(ky, kx, i, 0);
                            if xv != 0.0 {
                                for (gw, &gv) in grads.weight[base..base + co].iter_mut().zip(g) {
                                    *gw += xv * gv;
                                }
                            }
                            if let Some(gi) = grad_in.as_mut() {
                                let dot: f64 = self.weight[base..base + co].iter().zip(g).map(|(a, b)| a * b).sum();
                                gi.data[sp * self.in_channels + i] += dot;
                            }
                        }
                    }
                }
            }
        }
        grad_in
    }
}
