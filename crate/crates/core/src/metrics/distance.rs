//! Overlap and set-distance metrics on label maps.
//!
//! Hausdorff distances use an exact squared Euclidean distance transform
//! (Felzenszwalb and Huttenlocher's lower-envelope algorithm, run once per
//! axis). Squared distances between pixel centres are small integers, so the
//! transform is exact in `f64` and only the final `sqrt` rounds.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::LabelMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HausdorffVariant {
    /// Max over both directed sup-distances.
    ClassicMax,
    /// Max over both directed mean distances.
    #[default]
    ModifiedMean,
}

impl HausdorffVariant {
    pub fn parse(s: &str) -> Option<Self> {
        [Self::ClassicMax, Self::ModifiedMean].into_iter().find(|v| v.to_string() == s)
    }
}

impl fmt::Display for HausdorffVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::ClassicMax => "classic_max",
            Self::ModifiedMean => "modified_mean",
        })
    }
}

fn check_dims(pred: &LabelMap, truth: &LabelMap) -> Result<()> {
    if !pred.same_dims(truth) {
        return Err(Error::DimensionMismatch(format!(
            "prediction is {}x{}, truth is {}x{}",
            pred.height, pred.width, truth.height, truth.width
        )));
    }
    Ok(())
}

/// `2|A∩B| / (|A|+|B|)` for `A = (pred = c)`, `B = (truth = c)`.
/// Both empty gives 1, exactly one empty gives 0.
pub fn dice_score(pred: &LabelMap, truth: &LabelMap, c: u8) -> Result<f64> {
    check_dims(pred, truth)?;
    let (mut a, mut b, mut both) = (0usize, 0usize, 0usize);
    for (&p, &t) in pred.labels.iter().zip(&truth.labels) {
        a += (p == c) as usize;
        b += (t == c) as usize;
        both += (p == c && t == c) as usize;
    }
    Ok(if a + b == 0 { 1.0 } else { 2.0 * both as f64 / (a + b) as f64 })
}

/// 1D squared distance transform of `f` into `out` (lower envelope of parabolas).
fn edt_1d(f: &[f64], out: &mut [f64], v: &mut [usize], z: &mut [f64]) {
    let n = f.len();
    let mut k = 0;
    v[0] = 0;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in 1..n {
        if f[q].is_infinite() {
            continue;
        }
        if f[v[0]].is_infinite() {
            // No finite parabola yet.
            v[0] = q;
            continue;
        }
        loop {
            let p = v[k];
            let s = ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64)) / (2.0 * (q as f64 - p as f64));
            if s <= z[k] {
                if k == 0 {
                    v[0] = q;
                    break;
                }
                k -= 1;
            } else {
                k += 1;
                v[k] = q;
                z[k] = s;
                z[k + 1] = f64::INFINITY;
                break;
            }
        }
    }
    if f[v[0]].is_infinite() {
        out.fill(f64::INFINITY);
        return;
    }
    let mut k = 0;
    for (q, o) in out.iter_mut().enumerate() {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let d = q as f64 - v[k] as f64;
        *o = d * d + f[v[k]];
    }
}

/// Squared Euclidean distance from every pixel to the nearest `true` pixel of
/// `mask` (row-major `h × w`). All `+inf` when the mask is empty.
pub fn squared_distance_transform(mask: &[bool], h: usize, w: usize) -> Vec<f64> {
    assert_eq!(mask.len(), h * w, "mask size");
    let mut grid: Vec<f64> = mask.iter().map(|&m| if m { 0.0 } else { f64::INFINITY }).collect();
    let n = h.max(w);
    let (mut v, mut z) = (vec![0usize; n], vec![0.0; n + 1]);
    let (mut col, mut tmp) = (vec![0.0; h], vec![0.0; n]);
    for x in 0..w {
        for y in 0..h {
            col[y] = grid[y * w + x];
        }
        edt_1d(&col, &mut tmp[..h], &mut v, &mut z);
        for y in 0..h {
            grid[y * w + x] = tmp[y];
        }
    }
    for y in 0..h {
        let row = grid[y * w..(y + 1) * w].to_vec();
        edt_1d(&row, &mut grid[y * w..(y + 1) * w], &mut v, &mut z);
    }
    grid
}

/// Directed distances from each pixel of `from` to the set `to`.
fn directed<'a>(from: &'a [bool], to_dt: &'a [f64]) -> impl Iterator<Item = f64> + 'a {
    from.iter().zip(to_dt).filter(|(&m, _)| m).map(|(_, &d2)| d2.sqrt())
}

/// Hausdorff distance between the class-`c` pixel sets of `pred` and
/// `truth`, in pixel units. `None` when either set is empty.
pub fn hausdorff(pred: &LabelMap, truth: &LabelMap, c: u8, variant: HausdorffVariant) -> Result<Option<f64>> {
    check_dims(pred, truth)?;
    let a: Vec<bool> = pred.labels.iter().map(|&l| l == c).collect();
    let b: Vec<bool> = truth.labels.iter().map(|&l| l == c).collect();
    if !a.contains(&true) || !b.contains(&true) {
        return Ok(None);
    }
    let (h, w) = (pred.height, pred.width);
    let dt_a = squared_distance_transform(&a, h, w);
    let dt_b = squared_distance_transform(&b, h, w);
    let reduce = |it: &mut dyn Iterator<Item = f64>| match variant {
        HausdorffVariant::ClassicMax => it.fold(0.0, f64::max),
        HausdorffVariant::ModifiedMean => {
            let (mut sum, mut n) = (0.0, 0usize);
            for d in it {
                sum += d;
                n += 1;
            }
            sum / n as f64
        }
    };
    let ab = reduce(&mut directed(&a, &dt_b));
    let ba = reduce(&mut directed(&b, &dt_a));
    Ok(Some(ab.max(ba)))
}
