//! Experiment configuration, stored as TOML.
//!
//! Every key has a default, so an empty file is a valid config. Relative
//! paths in a loaded file are resolved against the file's directory.
//!
//! ```toml
//! seed = 7
//! out_dir = "runs/seed7"
//! dataset_size = 40
//! split_ratios = [0.7, 0.1, 0.1, 0.1]
//! features = 8
//! iterations = 2000
//! eval_interval = 100
//! hausdorff = "modified_mean"
//! noise_variance = 0.01
//!
//! [loss]
//! variant = "dominopp_eq2"   # baseline | domino_eq1 | dominopp_eq2
//! use_hccm = true
//! use_dynamic_scale = true
//! use_decaying_beta = true
//! constant_beta = 1.0
//!
//! [penalty]
//! source = "hccm"            # hierarchy | cm | hccm | fixture | file
//! # path = "W.csv"           # required when source = "file"
//!
//! [hierarchy]
//! tree = "(BG Eyes Air Blood (WM GM CSF) (CaB CoB) (Skin Fat Muscle))"
//! level_penalties = [0.5, 1.0]
//!
//! [adam]
//! lr = 0.001
//!
//! [shift]
//! intensity = 0.05
//! texture_factor = 2.0
//!
//! [rotation]
//! min_deg = 5.0
//! max_deg = 45.0
//!
//! [phantom]
//! height = 64
//! width = 64
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::{PhantomSpec, RotationParams, SplitRatios};
use crate::error::{Error, Result};
use crate::loss::{LossMode, LossVariant};
use crate::metrics::HausdorffVariant;
use crate::model::AdamConfig;
use crate::penalty::ClassHierarchy;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PenaltySource {
    /// Built from `[hierarchy]`.
    Hierarchy,
    /// Confusion of a baseline model on the holdout split.
    Cm,
    /// Confusion of a hierarchy-regularized model on the holdout split.
    Hccm,
    /// The built-in 12-class reference matrix.
    Fixture,
    /// A penalty CSV at `path`.
    File,
}

impl PenaltySource {
    pub fn parse(s: &str) -> Option<Self> {
        use PenaltySource::*;
        [Hierarchy, Cm, Hccm, Fixture, File]
            .into_iter()
            .find(|p| p.name() == s || (s == "hc" && *p == Hierarchy))
    }

    pub fn name(self) -> &'static str {
        match self {
            PenaltySource::Hierarchy => "hierarchy",
            PenaltySource::Cm => "cm",
            PenaltySource::Hccm => "hccm",
            PenaltySource::Fixture => "fixture",
            PenaltySource::File => "file",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PenaltyConfig {
    pub source: PenaltySource,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

impl Default for PenaltyConfig {
    fn default() -> Self {
        Self {
            source: PenaltySource::Hccm,
            path: None,
        }
    }
}

/// The "other site" test variant: same anatomy model, shifted intensities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShiftConfig {
    pub intensity: f64,
    pub texture_factor: f64,
}

impl Default for ShiftConfig {
    fn default() -> Self {
        Self {
            intensity: 0.05,
            texture_factor: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub out_dir: PathBuf,
    /// Load samples from a `gen-data` directory instead of generating them.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data_dir: Option<PathBuf>,
    pub dataset_size: usize,
    pub split_ratios: SplitRatios,
    /// Feature width of the hidden conv layers.
    pub features: usize,
    pub iterations: usize,
    pub eval_interval: usize,
    pub hausdorff: HausdorffVariant,
    pub noise_variance: f64,
    pub loss: LossMode,
    pub penalty: PenaltyConfig,
    pub hierarchy: ClassHierarchy,
    pub adam: AdamConfig,
    pub shift: ShiftConfig,
    pub rotation: RotationParams,
    pub phantom: PhantomSpec,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            out_dir: PathBuf::from("runs/default"),
            data_dir: None,
            dataset_size: 40,
            split_ratios: SplitRatios::default(),
            features: 8,
            iterations: 2000,
            eval_interval: 100,
            hausdorff: HausdorffVariant::default(),
            noise_variance: crate::data::DEFAULT_NOISE_VARIANCE,
            loss: LossMode::default(),
            penalty: PenaltyConfig::default(),
            hierarchy: ClassHierarchy::default_head(),
            adam: AdamConfig::default(),
            shift: ShiftConfig::default(),
            rotation: RotationParams::default(),
            phantom: PhantomSpec::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str, origin: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("{origin}: {e}")))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Reads, resolves relative paths and validates.
    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingFile(path.to_path_buf()));
        }
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml(&text, &path.display().to_string())?;
        let base = path.parent().unwrap_or(Path::new(""));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        resolve(&mut cfg.out_dir);
        if let Some(p) = cfg.data_dir.as_mut() {
            resolve(p);
        }
        if let Some(p) = cfg.penalty.path.as_mut() {
            resolve(p);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn classes(&self) -> usize {
        self.phantom.classes.len()
    }

    /// Evaluation cadence, clamped to the run length.
    pub fn effective_eval_interval(&self) -> usize {
        self.eval_interval.clamp(1, self.iterations.max(1))
    }

    /// The penalty source actually used for the configured loss: the
    /// decaying objective with `use_hccm = false` swaps an HCCM source for
    /// the plain confusion-derived one.
    pub fn effective_penalty_source(&self) -> PenaltySource {
        let src = self.penalty.source;
        if self.loss.variant == LossVariant::DominoppEq2 && !self.loss.use_hccm && src == PenaltySource::Hccm {
            PenaltySource::Cm
        } else {
            src
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::Config("iterations must be positive".into()));
        }
        if self.features == 0 {
            return Err(Error::Config("features must be positive".into()));
        }
        if !(self.noise_variance >= 0.0 && self.noise_variance.is_finite()) {
            return Err(Error::Config(format!("noise_variance {} is invalid", self.noise_variance)));
        }
        if !(self.shift.texture_factor > 0.0 && self.shift.texture_factor.is_finite() && self.shift.intensity.is_finite()) {
            return Err(Error::Config("shift parameters must be finite with a positive texture factor".into()));
        }
        if !(self.adam.lr > 0.0 && self.adam.lr.is_finite()) {
            return Err(Error::Config(format!("learning rate {} is invalid", self.adam.lr)));
        }
        self.loss.validate()?;
        self.rotation.validate()?;
        self.phantom.validate()?;
        crate::data::split_sizes(self.dataset_size, &self.split_ratios)?;
        if let Some(d) = &self.data_dir {
            let manifest = d.join(crate::data::MANIFEST_FILE);
            if !manifest.exists() {
                return Err(Error::MissingFile(manifest));
            }
        }
        if self.penalty.source == PenaltySource::File {
            match &self.penalty.path {
                None => return Err(Error::Config("penalty source 'file' needs penalty.path".into())),
                Some(p) if !p.exists() => return Err(Error::MissingFile(p.clone())),
                _ => {}
            }
        }
        Ok(())
    }

    /// 64-bit FNV-1a of the serialized config, as 16 hex digits.
    pub fn hash(&self) -> String {
        format!("{:016x}", fnv1a(self.to_toml().as_bytes()))
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let cfg = ExperimentConfig::from_toml("", "mem").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        cfg.validate().unwrap();
    }

    #[test]
    fn toml_round_trip() {
        let mut cfg = ExperimentConfig::default();
        cfg.seed = 11;
        cfg.loss = LossMode::baseline();
        cfg.penalty.source = PenaltySource::Fixture;
        let back = ExperimentConfig::from_toml(&cfg.to_toml(), "mem").unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash(), cfg.hash());
        assert_ne!(ExperimentConfig::default().hash(), cfg.hash());
    }

    #[test]
    fn partial_tables_and_bad_values() {
        let cfg = ExperimentConfig::from_toml("iterations = 50\n[loss]\nvariant = \"baseline\"\n", "mem").unwrap();
        assert_eq!(cfg.iterations, 50);
        assert_eq!(cfg.loss.variant, LossVariant::Baseline);
        assert!(cfg.loss.use_hccm, "unset keys keep their defaults");
        assert!(ExperimentConfig::from_toml("iterations = \"many\"", "mem").is_err());
        let zero = ExperimentConfig::from_toml("iterations = 0", "mem").unwrap();
        assert!(zero.validate().is_err());
        let file = ExperimentConfig::from_toml("[penalty]\nsource = \"file\"\n", "mem").unwrap();
        assert!(file.validate().is_err());
    }

    #[test]
    fn ablation_swaps_hccm_for_cm() {
        let mut cfg = ExperimentConfig::default();
        assert_eq!(cfg.effective_penalty_source(), PenaltySource::Hccm);
        cfg.loss.use_hccm = false;
        assert_eq!(cfg.effective_penalty_source(), PenaltySource::Cm);
        assert_eq!(PenaltySource::parse("hc"), Some(PenaltySource::Hierarchy));
    }

    #[test]
    fn fnv_reference_values() {
        assert_eq!(fnv1a(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a(b"a"), 0xaf63dc4c8601ec8c);
    }
}
