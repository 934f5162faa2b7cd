//! Deterministic train / validation / penalty-holdout / test partitions.

use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Validation,
    /// Held-out set used only to build confusion-derived penalties.
    Holdout,
    Test,
}

impl Split {
    pub const ALL: [Split; 4] = [Split::Train, Split::Validation, Split::Holdout, Split::Test];

    pub fn parse(s: &str) -> Option<Split> {
        Split::ALL.into_iter().find(|k| k.to_string() == s)
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Holdout => "holdout",
            Split::Test => "test",
        })
    }
}

/// Fractions for train / validation / holdout / test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios(pub [f64; 4]);

impl Default for SplitRatios {
    fn default() -> Self {
        SplitRatios([0.70, 0.10, 0.10, 0.10])
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SplitAssignment {
    pub train: Vec<String>,
    pub validation: Vec<String>,
    pub holdout: Vec<String>,
    pub test: Vec<String>,
}

impl SplitAssignment {
    pub fn ids(&self, split: Split) -> &[String] {
        match split {
            Split::Train => &self.train,
            Split::Validation => &self.validation,
            Split::Holdout => &self.holdout,
            Split::Test => &self.test,
        }
    }

    fn ids_mut(&mut self, split: Split) -> &mut Vec<String> {
        match split {
            Split::Train => &mut self.train,
            Split::Validation => &mut self.validation,
            Split::Holdout => &mut self.holdout,
            Split::Test => &mut self.test,
        }
    }

    pub fn split_of(&self, id: &str) -> Option<Split> {
        Split::ALL.into_iter().find(|&s| self.ids(s).iter().any(|x| x == id))
    }

    pub fn sizes(&self) -> [usize; 4] {
        Split::ALL.map(|s| self.ids(s).len())
    }

    /// Rebuilds an assignment from `(id, split)` pairs.
    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, Split)>) -> Self {
        let mut out = SplitAssignment::default();
        for (id, split) in pairs {
            out.ids_mut(split).push(id.to_string());
        }
        out
    }
}

/// Split sizes by largest-remainder rounding of `ratios * n`.
pub fn split_sizes(n: usize, ratios: &SplitRatios) -> Result<[usize; 4]> {
    let r = ratios.0;
    if r.iter().any(|&x| !(x > 0.0 && x.is_finite())) || (r.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!("split ratios must be positive and sum to 1, got {r:?}")));
    }
    // Snap away float noise such as 0.7 * 40 = 27.999999999999996.
    let quotas = r.map(|x| (x * n as f64 * 1e9).round() / 1e9);
    let mut sizes = quotas.map(|q| q.floor() as usize);
    let mut order: Vec<usize> = (0..4).collect();
    // Largest fractional part first; ties by split order.
    order.sort_by(|&a, &b| {
        let fa = quotas[a] - quotas[a].floor();
        let fb = quotas[b] - quotas[b].floor();
        fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
    });
    let short = n - sizes.iter().sum::<usize>();
    for &k in order.iter().take(short) {
        sizes[k] += 1;
    }
    if let Some(k) = sizes.iter().position(|&s| s == 0) {
        return Err(Error::Config(format!(
            "{n} samples are too few: the {} split would be empty",
            Split::ALL[k]
        )));
    }
    Ok(sizes)
}

/// Shuffles `ids` with `seed` and cuts them into the four splits. Each
/// split lists its ids in sorted order.
pub fn make_splits(ids: &[String], ratios: &SplitRatios, seed: u64) -> Result<SplitAssignment> {
    let sizes = split_sizes(ids.len(), ratios)?;
    let mut shuffled = ids.to_vec();
    shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut rest = shuffled.as_slice();
    let mut out = SplitAssignment::default();
    for (split, size) in Split::ALL.into_iter().zip(sizes) {
        let (head, tail) = rest.split_at(size);
        let ids = out.ids_mut(split);
        ids.extend_from_slice(head);
        ids.sort();
        rest = tail;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("s{i}")).collect()
    }

    #[test]
    fn forty_at_defaults() {
        let a = make_splits(&ids(40), &SplitRatios::default(), 1).unwrap();
        assert_eq!(a.sizes(), [28, 4, 4, 4]);
    }

    #[test]
    fn full_size_counts() {
        assert_eq!(split_sizes(123, &SplitRatios::default()).unwrap(), [86, 13, 12, 12]);
        assert_eq!(split_sizes(10, &SplitRatios::default()).unwrap(), [7, 1, 1, 1]);
        assert!(split_sizes(7, &SplitRatios::default()).is_err());
    }

    #[test]
    fn disjoint_cover_and_deterministic() {
        let all = ids(23);
        let a = make_splits(&all, &SplitRatios::default(), 9).unwrap();
        let mut seen: Vec<String> = Split::ALL.iter().flat_map(|&s| a.ids(s).to_vec()).collect();
        seen.sort();
        let mut expect = all.clone();
        expect.sort();
        assert_eq!(seen, expect);
        assert_eq!(a, make_splits(&all, &SplitRatios::default(), 9).unwrap());
        assert_ne!(a, make_splits(&all, &SplitRatios::default(), 10).unwrap());
    }

    #[test]
    fn too_few_samples() {
        assert!(make_splits(&ids(3), &SplitRatios::default(), 0).is_err());
        assert!(make_splits(&ids(40), &SplitRatios([0.5, 0.5, 0.5, 0.5]), 0).is_err());
    }
}
