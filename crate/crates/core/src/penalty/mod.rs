//! Class-pair penalty matrices.
//!
//! A penalty matrix `W` is an `N × N` table with zero diagonal and entries in
//! `[0, 1]`; `W[t][p]` is the cost of placing probability mass on class `p`
//! when the true class is `t`. Three constructions are supported:
//!
//! - **HC**: from an expert class hierarchy ([`build_hc_matrix`]).
//! - **CM**: from a model's normalized confusion on held-out data
//!   ([`normalize_confusion`] then [`penalty_from_confusion`]).
//! - **HCCM**: the CM construction applied to a model that was itself trained
//!   with an HC penalty (orchestrated in [`crate::harness::pipeline`]).

mod confusion;
mod csv;
mod fixture;
mod hierarchy;

pub use confusion::{accumulate_confusion, normalize_confusion, penalty_from_confusion, ConfusionMatrix, RowStochasticMatrix};
pub use csv::{load_penalty_csv, parse_penalty_csv, penalty_to_csv, save_penalty_csv};
pub use fixture::{figure2_fixture, FIXTURE_CLASSES};
pub use hierarchy::{build_hc_matrix, ClassHierarchy, HierarchyNode};

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported class count.
pub const MAX_CLASSES: usize = 64;

/// Ordered, unique class names. Index is the class id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct ClassSet {
    names: Vec<String>,
}

impl ClassSet {
    pub fn new<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Result<Self> {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.len() < 2 {
            return Err(Error::Config(format!("need at least 2 classes, got {}", names.len())));
        }
        if names.len() > MAX_CLASSES {
            return Err(Error::Config(format!(
                "at most {MAX_CLASSES} classes are supported, got {}",
                names.len()
            )));
        }
        for (i, n) in names.iter().enumerate() {
            if n.trim().is_empty() {
                return Err(Error::Config(format!("class {i} has an empty name")));
            }
            if n.contains(',') || n.contains('\n') {
                return Err(Error::Config(format!("class name {n:?} contains a separator")));
            }
            if names[..i].contains(n) {
                return Err(Error::Config(format!("duplicate class name {n:?}")));
            }
        }
        Ok(Self { names })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, id: usize) -> &str {
        &self.names[id]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}

impl TryFrom<Vec<String>> for ClassSet {
    type Error = Error;

    fn try_from(v: Vec<String>) -> Result<Self> {
        ClassSet::new(v)
    }
}

impl From<ClassSet> for Vec<String> {
    fn from(c: ClassSet) -> Self {
        c.names
    }
}

/// How a penalty matrix was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Hc,
    Cm,
    Hccm,
    Fixture,
    File,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Provenance::Hc => "hc",
            Provenance::Cm => "cm",
            Provenance::Hccm => "hccm",
            Provenance::Fixture => "fixture",
            Provenance::File => "file",
        };
        f.write_str(s)
    }
}

/// Validated `N × N` penalty matrix (row = true class, column = predicted).
#[derive(Debug, Clone, PartialEq)]
pub struct PenaltyMatrix {
    values: Vec<f64>,
    classes: ClassSet,
    provenance: Provenance,
}

impl PenaltyMatrix {
    /// Builds a matrix from row-major values, enforcing the zero diagonal and
    /// the `[0, 1]` range.
    pub fn new(classes: ClassSet, values: Vec<f64>, provenance: Provenance) -> Result<Self> {
        let n = classes.len();
        if values.len() != n * n {
            return Err(Error::DimensionMismatch(format!(
                "{} values for a {n}x{n} penalty matrix",
                values.len()
            )));
        }
        for i in 0..n {
            for j in 0..n {
                let v = values[i * n + j];
                if !v.is_finite() || !(0.0..=1.0).contains(&v) {
                    return Err(Error::Validation(format!(
                        "penalty W[{}][{}] = {v} is outside [0, 1]",
                        classes.name(i),
                        classes.name(j)
                    )));
                }
            }
            if values[i * n + i] != 0.0 {
                return Err(Error::Validation(format!(
                    "diagonal penalty for class {} is {}, expected 0",
                    classes.name(i),
                    values[i * n + i]
                )));
            }
        }
        Ok(Self {
            values,
            classes,
            provenance,
        })
    }

    /// Clamps every entry into `[0, 1]` and zeroes the diagonal before
    /// validating. Used by constructions that can drift by rounding.
    pub(crate) fn from_clamped(classes: ClassSet, mut values: Vec<f64>, provenance: Provenance) -> Result<Self> {
        let n = classes.len();
        for (k, v) in values.iter_mut().enumerate() {
            *v = if k / n == k % n { 0.0 } else { v.clamp(0.0, 1.0) };
        }
        Self::new(classes, values, provenance)
    }

    /// All off-diagonal entries equal to `off`.
    pub fn uniform(classes: ClassSet, off: f64, provenance: Provenance) -> Result<Self> {
        let n = classes.len();
        let values = (0..n * n).map(|k| if k / n == k % n { 0.0 } else { off }).collect();
        Self::new(classes, values, provenance)
    }

    pub fn n(&self) -> usize {
        self.classes.len()
    }

    #[inline]
    pub fn get(&self, truth: usize, pred: usize) -> f64 {
        self.values[truth * self.n() + pred]
    }

    pub fn row(&self, truth: usize) -> &[f64] {
        let n = self.n();
        &self.values[truth * n..(truth + 1) * n]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn classes(&self) -> &ClassSet {
        &self.classes
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }

    pub fn is_symmetric(&self) -> bool {
        let n = self.n();
        (0..n).all(|i| (0..n).all(|j| self.get(i, j) == self.get(j, i)))
    }

    /// Entry looked up by class names.
    pub fn by_name(&self, truth: &str, pred: &str) -> Option<f64> {
        Some(self.get(self.classes.index_of(truth)?, self.classes.index_of(pred)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn abc() -> ClassSet {
        ClassSet::new(["A", "B", "C"]).unwrap()
    }

    #[test]
    fn class_set_rejects_duplicates_and_singletons() {
        assert!(ClassSet::new(["A", "A"]).is_err());
        assert!(ClassSet::new(["A"]).is_err());
        assert!(ClassSet::new(["A", ""]).is_err());
        assert_eq!(abc().index_of("C"), Some(2));
    }

    #[test]
    fn penalty_rejects_nonzero_diagonal() {
        let mut v = vec![1.0; 9];
        v[0] = 0.0;
        v[4] = 0.0;
        v[8] = 0.5;
        let err = PenaltyMatrix::new(abc(), v, Provenance::File).unwrap_err();
        assert!(err.to_string().contains("class C"), "{err}");
    }

    #[test]
    fn penalty_rejects_out_of_range() {
        let mut v = vec![0.0; 9];
        v[1] = 1.5;
        assert!(PenaltyMatrix::new(abc(), v, Provenance::File).is_err());
    }

    #[test]
    fn clamping_absorbs_drift() {
        let v = vec![1e-17, 1.0 + 1e-15, -1e-16, 0.3, 0.0, 0.2, 0.1, 0.4, 0.0];
        let w = PenaltyMatrix::from_clamped(abc(), v, Provenance::Cm).unwrap();
        assert_eq!(w.get(0, 0), 0.0);
        assert_eq!(w.get(0, 1), 1.0);
        assert_eq!(w.get(0, 2), 0.0);
    }
}
