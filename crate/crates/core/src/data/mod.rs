//! Synthetic segmentation data: phantom generation, splits, perturbations
//! and on-disk datasets.

mod io;
mod perturb;
mod phantom;
mod split;

pub use io::{load_dataset, read_float_grid, read_label_grid, save_dataset, write_float_grid, write_label_grid, MANIFEST_FILE};
pub use perturb::{
    draw_rotation_angle, gaussian_noise, perturb_gaussian, perturb_rotation, rotate_sample, RotationParams,
    DEFAULT_NOISE_VARIANCE,
};
pub use phantom::{
    generate_phantom, generate_phantom_with_geometry, BlobSpec, LayerRadii, PhantomGeometry, PhantomSpec, LAYER_ORDER,
};
pub use split::{make_splits, split_sizes, Split, SplitAssignment, SplitRatios};

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{LabelMap, Tensor3};

/// Which acquisition condition a sample represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Clean,
    Noisy,
    Rotated,
    /// Generated from a shifted phantom spec (stand-in for another scanner).
    Shifted,
}

impl Provenance {
    pub const ALL: [Provenance; 4] = [Provenance::Clean, Provenance::Noisy, Provenance::Rotated, Provenance::Shifted];

    pub fn parse(s: &str) -> Option<Provenance> {
        Provenance::ALL.into_iter().find(|p| p.to_string() == s)
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::Clean => "clean",
            Provenance::Noisy => "noisy",
            Provenance::Rotated => "rotated",
            Provenance::Shifted => "shifted",
        })
    }
}

/// Image (`H × W × 1`, values in `[0, 1]`) with its ground-truth labels.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentationSample {
    pub id: String,
    pub image: Tensor3,
    pub labels: LabelMap,
    pub provenance: Provenance,
}

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent per-child seed: `mix64(mix64(parent) ^ index)`.
pub fn child_seed(parent: u64, index: u64) -> u64 {
    mix64(mix64(parent) ^ index)
}

/// Seed stream tags so that different consumers of one master seed never
/// share a stream.
pub mod stream {
    pub const PHANTOMS: u64 = 1;
    pub const SPLITS: u64 = 2;
    pub const MODEL_INIT: u64 = 3;
    pub const SHUFFLE: u64 = 4;
    pub const NOISE: u64 = 5;
    pub const ROTATION: u64 = 6;
    pub const SHIFTED: u64 = 7;
}

/// A generated dataset with its split assignment. Samples are in id order.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub samples: Vec<SegmentationSample>,
    pub splits: SplitAssignment,
}

impl Dataset {
    /// `count` phantoms with ids `phantom-0000…`, split by `ratios`.
    pub fn generate(spec: &PhantomSpec, count: usize, ratios: &SplitRatios, seed: u64) -> Result<Self> {
        let phantom_seed = child_seed(seed, stream::PHANTOMS);
        let samples = (0..count)
            .map(|i| {
                let mut s = generate_phantom(spec, child_seed(phantom_seed, i as u64))?;
                s.id = format!("phantom-{i:04}");
                Ok(s)
            })
            .collect::<Result<Vec<_>>>()?;
        let ids: Vec<String> = samples.iter().map(|s| s.id.clone()).collect();
        let splits = make_splits(&ids, ratios, child_seed(seed, stream::SPLITS))?;
        Ok(Self { samples, splits })
    }

    pub fn get(&self, id: &str) -> Result<&SegmentationSample> {
        self.samples
            .iter()
            .find(|s| s.id == id)
            .ok_or_else(|| Error::Config(format!("sample {id:?} is not in the dataset")))
    }

    pub fn split(&self, split: Split) -> Result<Vec<&SegmentationSample>> {
        self.splits.ids(split).iter().map(|id| self.get(id)).collect()
    }
}
