//! Dataset directory layout.
//!
//! ```text
//! <dir>/manifest.csv             id,provenance,split,image,labels
//! <dir>/<id>.image.txt           float grid
//! <dir>/<id>.labels.txt          integer grid
//! ```
//!
//! Grid files start with a header line `penreg-grid 1 <float|label> H W C`
//! (`C` is 1 for label grids) followed by `H` lines of `W·C`
//! space-separated values, channels interleaved per pixel. Floats are
//! written in shortest round-trip form, so save/load is bitwise exact.

use std::fmt::Write as _;
use std::path::Path;

use super::{Dataset, Provenance, SegmentationSample, Split, SplitAssignment};
use crate::error::{Error, Result};
use crate::grid::{LabelMap, Tensor3};

pub const MANIFEST_FILE: &str = "manifest.csv";
const GRID_MAGIC: &str = "penreg-grid";

fn grid_text<T: std::fmt::Display>(kind: &str, h: usize, w: usize, c: usize, values: &[T]) -> String {
    let mut out = format!("{GRID_MAGIC} 1 {kind} {h} {w} {c}\n");
    for row in values.chunks(w * c) {
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            write!(out, "{v}").unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn write_float_grid(t: &Tensor3, path: &Path) -> Result<()> {
    let text = grid_text("float", t.height, t.width, t.channels, &t.data);
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn write_label_grid(m: &LabelMap, path: &Path) -> Result<()> {
    let text = grid_text("label", m.height, m.width, 1, &m.labels);
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn read_grid<T: std::str::FromStr>(path: &Path, kind: &str) -> Result<(usize, usize, usize, Vec<T>)> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let origin = path.display().to_string();
    let err = |line: usize, msg: String| Error::Parse {
        path: origin.clone(),
        line,
        msg,
    };
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap_or("").split_whitespace().collect();
    if header.len() != 6 || header[0] != GRID_MAGIC || header[1] != "1" || header[2] != kind {
        return Err(err(1, format!("expected header '{GRID_MAGIC} 1 {kind} H W C'")));
    }
    let dims: Vec<usize> = header[3..]
        .iter()
        .map(|s| s.parse().map_err(|_| err(1, format!("bad dimension {s:?}"))))
        .collect::<Result<_>>()?;
    let (h, w, c) = (dims[0], dims[1], dims[2]);
    let mut values = Vec::with_capacity(h * w * c);
    for y in 0..h {
        let line = lines.next().ok_or_else(|| err(y + 2, "missing row".into()))?;
        let before = values.len();
        for cell in line.split_whitespace() {
            values.push(cell.parse().map_err(|_| err(y + 2, format!("bad value {cell:?}")))?);
        }
        if values.len() - before != w * c {
            return Err(err(y + 2, format!("expected {} values, found {}", w * c, values.len() - before)));
        }
    }
    Ok((h, w, c, values))
}

pub fn read_float_grid(path: &Path) -> Result<Tensor3> {
    let (h, w, c, v) = read_grid::<f64>(path, "float")?;
    Tensor3::from_vec(h, w, c, v)
}

pub fn read_label_grid(path: &Path) -> Result<LabelMap> {
    let (h, w, c, v) = read_grid::<u8>(path, "label")?;
    if c != 1 {
        return Err(Error::Parse {
            path: path.display().to_string(),
            line: 1,
            msg: "label grids have one channel".into(),
        });
    }
    LabelMap::from_vec(h, w, v)
}

/// Writes every sample plus the manifest into `dir` (created if needed).
pub fn save_dataset(ds: &Dataset, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut manifest = String::from("id,provenance,split,image,labels\n");
    for s in &ds.samples {
        let split = ds
            .splits
            .split_of(&s.id)
            .ok_or_else(|| Error::Validation(format!("sample {} has no split", s.id)))?;
        let image = format!("{}.image.txt", s.id);
        let labels = format!("{}.labels.txt", s.id);
        write_float_grid(&s.image, &dir.join(&image))?;
        write_label_grid(&s.labels, &dir.join(&labels))?;
        writeln!(manifest, "{},{},{},{},{}", s.id, s.provenance, split, image, labels).unwrap();
    }
    let path = dir.join(MANIFEST_FILE);
    std::fs::write(&path, manifest).map_err(|e| Error::io(&path, e))
}

pub fn load_dataset(dir: &Path) -> Result<Dataset> {
    let path = dir.join(MANIFEST_FILE);
    if !path.exists() {
        return Err(Error::MissingFile(path));
    }
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let origin = path.display().to_string();
    let mut samples = Vec::new();
    let mut pairs = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let err = |msg: String| Error::Parse {
            path: origin.clone(),
            line: i + 1,
            msg,
        };
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 5 {
            return Err(err(format!("expected 5 fields, found {}", cells.len())));
        }
        let provenance = Provenance::parse(cells[1]).ok_or_else(|| err(format!("unknown provenance {:?}", cells[1])))?;
        let split = Split::parse(cells[2]).ok_or_else(|| err(format!("unknown split {:?}", cells[2])))?;
        let image = read_float_grid(&dir.join(cells[3]))?;
        let labels = read_label_grid(&dir.join(cells[4]))?;
        if image.height != labels.height || image.width != labels.width {
            return Err(err(format!("image and labels of {} differ in size", cells[0])));
        }
        samples.push(SegmentationSample {
            id: cells[0].to_string(),
            image,
            labels,
            provenance,
        });
        pairs.push((cells[0].to_string(), split));
    }
    let splits = SplitAssignment::from_pairs(pairs.iter().map(|(id, s)| (id.as_str(), *s)));
    Ok(Dataset { samples, splits })
}
