//! Confusion accumulation and the confusion-derived (CM) penalty.

use super::{ClassSet, PenaltyMatrix, Provenance};
use crate::error::{Error, Result};
use crate::grid::LabelMap;

/// Pixel counts indexed `[true][predicted]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    counts: Vec<u64>,
    classes: ClassSet,
}

impl ConfusionMatrix {
    pub fn new(classes: ClassSet) -> Self {
        let n = classes.len();
        Self {
            counts: vec![0; n * n],
            classes,
        }
    }

    pub fn from_counts(classes: ClassSet, counts: Vec<u64>) -> Result<Self> {
        let n = classes.len();
        if counts.len() != n * n {
            return Err(Error::DimensionMismatch(format!("{} counts for {n} classes", counts.len())));
        }
        Ok(Self { counts, classes })
    }

    pub fn n(&self) -> usize {
        self.classes.len()
    }

    pub fn get(&self, truth: usize, pred: usize) -> u64 {
        self.counts[truth * self.n() + pred]
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn classes(&self) -> &ClassSet {
        &self.classes
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Additive merge of two accumulators over the same classes.
    pub fn merge(mut self, other: &ConfusionMatrix) -> Result<Self> {
        if self.classes != other.classes {
            return Err(Error::DimensionMismatch("merging confusion matrices over different classes".into()));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        Ok(self)
    }
}

/// Adds one `(truth, pred)` count per pixel to `acc`.
pub fn accumulate_confusion(pred: &LabelMap, truth: &LabelMap, mut acc: ConfusionMatrix) -> Result<ConfusionMatrix> {
    if !pred.same_dims(truth) {
        return Err(Error::DimensionMismatch(format!(
            "prediction is {}x{}, truth is {}x{}",
            pred.height, pred.width, truth.height, truth.width
        )));
    }
    let n = acc.n();
    truth.check_range(n)?;
    pred.check_range(n)?;
    for (&t, &p) in truth.labels.iter().zip(&pred.labels) {
        acc.counts[t as usize * n + p as usize] += 1;
    }
    Ok(acc)
}

/// Row-normalized confusion. Rows whose true class had no pixels are
/// flagged invalid and stay all-zero.
#[derive(Debug, Clone, PartialEq)]
pub struct RowStochasticMatrix {
    values: Vec<f64>,
    valid_rows: Vec<bool>,
    classes: ClassSet,
}

impl RowStochasticMatrix {
    /// Builds from raw values; entries must lie in `[0, 1]`.
    pub fn new(classes: ClassSet, values: Vec<f64>, valid_rows: Vec<bool>) -> Result<Self> {
        let n = classes.len();
        if values.len() != n * n || valid_rows.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "row-stochastic matrix needs {} values and {n} row flags",
                n * n
            )));
        }
        if let Some(k) = values.iter().position(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::Validation(format!(
                "normalized confusion entry [{}][{}] = {} is outside [0, 1]",
                k / n,
                k % n,
                values[k]
            )));
        }
        Ok(Self {
            values,
            valid_rows,
            classes,
        })
    }

    pub fn n(&self) -> usize {
        self.classes.len()
    }

    pub fn get(&self, truth: usize, pred: usize) -> f64 {
        self.values[truth * self.n() + pred]
    }

    pub fn is_valid_row(&self, truth: usize) -> bool {
        self.valid_rows[truth]
    }

    pub fn classes(&self) -> &ClassSet {
        &self.classes
    }
}

/// Divides each row by the number of true pixels of that class.
pub fn normalize_confusion(cm: &ConfusionMatrix) -> RowStochasticMatrix {
    let n = cm.n();
    let mut values = vec![0.0; n * n];
    let mut valid_rows = vec![false; n];
    for t in 0..n {
        let row = &cm.counts[t * n..(t + 1) * n];
        let sum: u64 = row.iter().sum();
        if sum == 0 {
            continue;
        }
        valid_rows[t] = true;
        for (p, &c) in row.iter().enumerate() {
            values[t * n + p] = c as f64 / sum as f64;
        }
    }
    RowStochasticMatrix {
        values,
        valid_rows,
        classes: cm.classes.clone(),
    }
}

/// `W[i][j] = 1 - norm[i][j]` off the diagonal, zero on it. Classes with no
/// support get a maximal penalty row.
pub fn penalty_from_confusion(norm: &RowStochasticMatrix) -> Result<PenaltyMatrix> {
    let n = norm.n();
    if let Some(k) = norm.values.iter().position(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::Validation(format!(
            "normalized confusion entry [{}][{}] = {} is outside [0, 1]",
            k / n,
            k % n,
            norm.values[k]
        )));
    }
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        if !norm.valid_rows[i] {
            log::warn!(
                "class {} has no pixels in the held-out set; using maximal penalties",
                norm.classes.name(i)
            );
        }
        for j in 0..n {
            if i == j {
                continue;
            }
            values[i * n + j] = if norm.valid_rows[i] { 1.0 - norm.get(i, j) } else { 1.0 };
        }
    }
    PenaltyMatrix::from_clamped(norm.classes.clone(), values, Provenance::Cm)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two() -> ClassSet {
        ClassSet::new(["a", "b"]).unwrap()
    }

    #[test]
    fn accumulate_identical_maps() {
        let m = LabelMap::filled(2, 5, 0);
        let acc = accumulate_confusion(&m, &m, ConfusionMatrix::new(two())).unwrap();
        assert_eq!(acc.counts(), &[10, 0, 0, 0]);
    }

    #[test]
    fn accumulate_hand_count() {
        let truth = LabelMap::from_vec(1, 4, vec![0, 0, 1, 1]).unwrap();
        let pred = LabelMap::from_vec(1, 4, vec![0, 1, 1, 1]).unwrap();
        let acc = accumulate_confusion(&pred, &truth, ConfusionMatrix::new(two())).unwrap();
        assert_eq!(acc.counts(), &[1, 1, 0, 2]);
    }

    #[test]
    fn accumulate_is_additive() {
        let t1 = LabelMap::from_vec(1, 3, vec![0, 1, 1]).unwrap();
        let p1 = LabelMap::from_vec(1, 3, vec![1, 1, 0]).unwrap();
        let t2 = LabelMap::from_vec(1, 2, vec![0, 0]).unwrap();
        let p2 = LabelMap::from_vec(1, 2, vec![0, 1]).unwrap();
        let split = accumulate_confusion(&p1, &t1, ConfusionMatrix::new(two())).unwrap();
        let split = accumulate_confusion(&p2, &t2, split).unwrap();
        let tc = LabelMap::from_vec(1, 5, vec![0, 1, 1, 0, 0]).unwrap();
        let pc = LabelMap::from_vec(1, 5, vec![1, 1, 0, 0, 1]).unwrap();
        let joint = accumulate_confusion(&pc, &tc, ConfusionMatrix::new(two())).unwrap();
        assert_eq!(split, joint);
        let merged = accumulate_confusion(&p1, &t1, ConfusionMatrix::new(two()))
            .unwrap()
            .merge(&accumulate_confusion(&p2, &t2, ConfusionMatrix::new(two())).unwrap())
            .unwrap();
        assert_eq!(merged, joint);
    }

    #[test]
    fn accumulate_reports_offending_coordinate() {
        let truth = LabelMap::from_vec(2, 2, vec![0, 0, 1, 0]).unwrap();
        let pred = LabelMap::from_vec(2, 2, vec![0, 0, 0, 7]).unwrap();
        match accumulate_confusion(&pred, &truth, ConfusionMatrix::new(two())) {
            Err(Error::LabelOutOfRange { row: 1, col: 1, label: 7, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn normalize_examples() {
        let cm = ConfusionMatrix::from_counts(two(), vec![90, 10, 20, 80]).unwrap();
        let norm = normalize_confusion(&cm);
        assert_eq!([norm.get(0, 0), norm.get(0, 1), norm.get(1, 0), norm.get(1, 1)], [0.9, 0.1, 0.2, 0.8]);
        assert!(norm.is_valid_row(0) && norm.is_valid_row(1));

        let norm = normalize_confusion(&ConfusionMatrix::from_counts(two(), vec![5, 0, 0, 5]).unwrap());
        assert_eq!([norm.get(0, 0), norm.get(0, 1), norm.get(1, 0), norm.get(1, 1)], [1.0, 0.0, 0.0, 1.0]);

        let norm = normalize_confusion(&ConfusionMatrix::from_counts(two(), vec![0, 0, 3, 3]).unwrap());
        assert!(!norm.is_valid_row(0));
        assert_eq!([norm.get(0, 0), norm.get(0, 1)], [0.0, 0.0]);
        assert_eq!([norm.get(1, 0), norm.get(1, 1)], [0.5, 0.5]);
    }

    #[test]
    fn penalty_examples() {
        let norm = RowStochasticMatrix::new(two(), vec![0.9, 0.1, 0.2, 0.8], vec![true, true]).unwrap();
        let w = penalty_from_confusion(&norm).unwrap();
        assert_eq!(w.values(), &[0.0, 0.9, 0.8, 0.0]);
        assert_eq!(w.provenance(), Provenance::Cm);

        let id = RowStochasticMatrix::new(two(), vec![1.0, 0.0, 0.0, 1.0], vec![true, true]).unwrap();
        assert_eq!(penalty_from_confusion(&id).unwrap().values(), &[0.0, 1.0, 1.0, 0.0]);
    }

    #[test]
    fn confusion_rate_maps_to_complement() {
        let cs = ClassSet::new(["WM", "GM"]).unwrap();
        let cm = ConfusionMatrix::from_counts(cs, vec![96, 4, 3, 97]).unwrap();
        let w = penalty_from_confusion(&normalize_confusion(&cm)).unwrap();
        assert!((w.by_name("WM", "GM").unwrap() - 0.96).abs() < 1e-12);
        assert!((w.by_name("GM", "WM").unwrap() - 0.97).abs() < 1e-12);
    }

    #[test]
    fn invalid_rows_get_maximal_penalty() {
        let cs = ClassSet::new(["a", "b", "c"]).unwrap();
        let cm = ConfusionMatrix::from_counts(cs, vec![0, 0, 0, 1, 3, 0, 0, 0, 4]).unwrap();
        let w = penalty_from_confusion(&normalize_confusion(&cm)).unwrap();
        assert_eq!(w.row(0), &[0.0, 1.0, 1.0]);
        assert_eq!(w.row(1), &[0.75, 0.0, 1.0]);
    }

    #[test]
    fn out_of_range_norm_rejected() {
        assert!(RowStochasticMatrix::new(two(), vec![1.2, -0.2, 0.0, 1.0], vec![true, true]).is_err());
    }
}
