//! Test-time evaluation on clean, noisy, rotated and shifted variants of the
//! test split.

use std::fmt;

use super::config::ExperimentConfig;
use crate::data::{
    child_seed, generate_phantom, perturb_gaussian, perturb_rotation, stream, Dataset, SegmentationSample, Split,
};
use crate::error::{Error, Result};
use crate::metrics::{aggregate_report, sample_metrics, MetricsReport};
use crate::model::{predict, ModelParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DatasetVariant {
    Clean,
    Noisy,
    Rotated,
    Shifted,
}

impl DatasetVariant {
    pub const ALL: [DatasetVariant; 4] = [
        DatasetVariant::Clean,
        DatasetVariant::Noisy,
        DatasetVariant::Rotated,
        DatasetVariant::Shifted,
    ];
}

impl fmt::Display for DatasetVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DatasetVariant::Clean => "clean",
            DatasetVariant::Noisy => "noisy",
            DatasetVariant::Rotated => "rotated",
            DatasetVariant::Shifted => "shifted",
        })
    }
}

/// Samples of one test variant. Perturbation seeds depend only on the master
/// seed and the sample's position in the test split.
pub fn test_variant(cfg: &ExperimentConfig, ds: &Dataset, variant: DatasetVariant) -> Result<Vec<SegmentationSample>> {
    let test = ds.split(Split::Test)?;
    if test.is_empty() {
        return Err(Error::Config("the test split is empty".into()));
    }
    let per_sample = |tag: u64, i: usize| child_seed(child_seed(cfg.seed, tag), i as u64);
    test.iter()
        .enumerate()
        .map(|(i, s)| match variant {
            DatasetVariant::Clean => Ok((*s).clone()),
            DatasetVariant::Noisy => perturb_gaussian(s, per_sample(stream::NOISE, i), cfg.noise_variance),
            DatasetVariant::Rotated => perturb_rotation(s, per_sample(stream::ROTATION, i), &cfg.rotation),
            DatasetVariant::Shifted => {
                let spec = cfg.phantom.shifted(cfg.shift.intensity, cfg.shift.texture_factor);
                let mut p = generate_phantom(&spec, per_sample(stream::SHIFTED, i))?;
                p.id = format!("{}-shifted", s.id);
                Ok(p)
            }
        })
        .collect()
}

pub fn evaluate_samples(params: &ModelParams, samples: &[SegmentationSample], cfg: &ExperimentConfig) -> Result<MetricsReport> {
    let classes = cfg.classes();
    let per_sample = samples
        .iter()
        .map(|s| sample_metrics(&predict(params, &s.image)?, &s.labels, classes, cfg.hausdorff))
        .collect::<Result<Vec<_>>>()?;
    aggregate_report(&cfg.phantom.classes, per_sample)
}

/// One report per variant, in [`DatasetVariant::ALL`] order.
pub fn evaluate(params: &ModelParams, ds: &Dataset, cfg: &ExperimentConfig) -> Result<Vec<(DatasetVariant, MetricsReport)>> {
    if params.classes() != cfg.classes() {
        return Err(Error::DimensionMismatch(format!(
            "checkpoint predicts {} classes, config has {}",
            params.classes(),
            cfg.classes()
        )));
    }
    DatasetVariant::ALL
        .into_iter()
        .map(|v| Ok((v, evaluate_samples(params, &test_variant(cfg, ds, v)?, cfg)?)))
        .collect()
}

pub fn named(reports: Vec<(DatasetVariant, MetricsReport)>) -> Vec<(String, MetricsReport)> {
    reports.into_iter().map(|(v, r)| (v.to_string(), r)).collect()
}
