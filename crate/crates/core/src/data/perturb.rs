//! Out-of-distribution perturbations: additive Gaussian noise and in-plane
//! rotation.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{Provenance, SegmentationSample};
use crate::error::{Error, Result};
use crate::grid::{LabelMap, Tensor3};

pub const DEFAULT_NOISE_VARIANCE: f64 = 0.01;

/// I.i.d. `N(0, variance)` draws, one per pixel.
pub fn gaussian_noise(pixels: usize, seed: u64, variance: f64) -> Result<Vec<f64>> {
    if !(variance > 0.0 && variance.is_finite()) {
        return Err(Error::Domain(format!("noise variance must be positive, got {variance}")));
    }
    let dist = Normal::new(0.0, variance.sqrt()).expect("positive finite std");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..pixels).map(|_| dist.sample(&mut rng)).collect())
}

/// Adds zero-mean Gaussian noise to the image and clamps to `[0, 1]`.
pub fn perturb_gaussian(sample: &SegmentationSample, seed: u64, variance: f64) -> Result<SegmentationSample> {
    let noise = gaussian_noise(sample.image.data.len(), seed, variance)?;
    let mut out = sample.clone();
    for (v, n) in out.image.data.iter_mut().zip(noise) {
        *v = (*v + n).clamp(0.0, 1.0);
    }
    out.provenance = Provenance::Noisy;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RotationParams {
    pub min_deg: f64,
    pub max_deg: f64,
    /// Label written where the rotated frame uncovers empty space.
    pub fill_label: u8,
    pub fill_intensity: f64,
}

impl Default for RotationParams {
    fn default() -> Self {
        Self {
            min_deg: 5.0,
            max_deg: 45.0,
            fill_label: 0,
            fill_intensity: 0.0,
        }
    }
}

impl RotationParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.min_deg > 0.0 && self.min_deg < self.max_deg && self.max_deg.is_finite()) {
            return Err(Error::Config(format!(
                "rotation range must satisfy 0 < min < max, got [{}, {}]",
                self.min_deg, self.max_deg
            )));
        }
        Ok(())
    }
}

/// Signed angle in degrees: magnitude uniform in `[min, max]`, sign fair.
pub fn draw_rotation_angle(seed: u64, params: &RotationParams) -> Result<f64> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let magnitude = rng.random_range(params.min_deg..=params.max_deg);
    Ok(if rng.random_bool(0.5) { magnitude } else { -magnitude })
}

/// Rotates image (bilinear) and labels (nearest neighbor) by `angle_deg`
/// about the image center. Positive angles turn the content clockwise on
/// screen (rows grow downward).
pub fn rotate_sample(sample: &SegmentationSample, angle_deg: f64, params: &RotationParams) -> SegmentationSample {
    let (h, w) = (sample.labels.height, sample.labels.width);
    let (cy, cx) = ((h as f64 - 1.0) / 2.0, (w as f64 - 1.0) / 2.0);
    let (sin, cos) = angle_deg.to_radians().sin_cos();
    let channels = sample.image.channels;
    let mut image = Tensor3::zeros(h, w, channels);
    let mut labels = LabelMap::filled(h, w, params.fill_label);

    let src_value = |y: isize, x: isize, c: usize| -> f64 {
        if y < 0 || x < 0 || y >= h as isize || x >= w as isize {
            params.fill_intensity
        } else {
            sample.image.get(y as usize, x as usize, c)
        }
    };

    for y in 0..h {
        for x in 0..w {
            // Inverse map: output pixel to its pre-image in the source.
            let (dy, dx) = (y as f64 - cy, x as f64 - cx);
            let sy = cy + cos * dy - sin * dx;
            let sx = cx + sin * dy + cos * dx;

            let (ny, nx) = (sy.round(), sx.round());
            if ny >= 0.0 && nx >= 0.0 && ny < h as f64 && nx < w as f64 {
                labels.set(y, x, sample.labels.get(ny as usize, nx as usize));
            }

            let (y0, x0) = (sy.floor(), sx.floor());
            let (fy, fx) = (sy - y0, sx - x0);
            let (y0, x0) = (y0 as isize, x0 as isize);
            for c in 0..channels {
                let v = (1.0 - fy) * ((1.0 - fx) * src_value(y0, x0, c) + fx * src_value(y0, x0 + 1, c))
                    + fy * ((1.0 - fx) * src_value(y0 + 1, x0, c) + fx * src_value(y0 + 1, x0 + 1, c));
                image.set(y, x, c, v.clamp(0.0, 1.0));
            }
        }
    }
    SegmentationSample {
        id: sample.id.clone(),
        image,
        labels,
        provenance: Provenance::Rotated,
    }
}

/// Random rotation with magnitude in `[min_deg, max_deg]`, either direction.
pub fn perturb_rotation(sample: &SegmentationSample, seed: u64, params: &RotationParams) -> Result<SegmentationSample> {
    let angle = draw_rotation_angle(seed, params)?;
    Ok(rotate_sample(sample, angle, params))
}
