//! Penalty matrix CSV format.
//!
//! ```text
//! BG,WM,GM
//! BG,0,1,1
//! WM,1,0,0.96
//! GM,1,0.97,0
//! ```
//!
//! The header row lists the class names (a leading empty cell, as written by
//! spreadsheet tools, is accepted). Each following row is a class name
//! and `N` decimal values. Values are written in shortest round-trip form.

use std::fmt::Write as _;
use std::path::Path;

use super::{ClassSet, PenaltyMatrix, Provenance};
use crate::error::{Error, Result};

pub fn penalty_to_csv(w: &PenaltyMatrix) -> String {
    let mut out = String::new();
    out.push_str(&w.classes().names().join(","));
    out.push('\n');
    for i in 0..w.n() {
        out.push_str(w.classes().name(i));
        for v in w.row(i) {
            write!(out, ",{v}").unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn save_penalty_csv(w: &PenaltyMatrix, path: &Path) -> Result<()> {
    std::fs::write(path, penalty_to_csv(w)).map_err(|e| Error::io(path, e))
}

pub fn load_penalty_csv(path: &Path) -> Result<PenaltyMatrix> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_penalty_csv(&text, &path.display().to_string())
}

/// Parses CSV text; `origin` names the source in error messages.
pub fn parse_penalty_csv(text: &str, origin: &str) -> Result<PenaltyMatrix> {
    let parse_err = |line: usize, msg: String| Error::Parse {
        path: origin.to_string(),
        line,
        msg,
    };
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| parse_err(1, "empty penalty file".into()))?;
    let mut header_cells: Vec<&str> = header.split(',').map(str::trim).collect();
    if header_cells.first() == Some(&"") {
        header_cells.remove(0);
    }
    let classes = ClassSet::new(header_cells.iter().map(|s| s.to_string())).map_err(|e| parse_err(1, e.to_string()))?;
    let n = classes.len();

    let mut values = Vec::with_capacity(n * n);
    let mut rows = 0;
    for (idx, line) in lines {
        let lineno = idx + 1;
        if rows == n {
            return Err(parse_err(lineno, format!("more than {n} data rows")));
        }
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != n + 1 {
            return Err(parse_err(
                lineno,
                format!("expected a class name and {n} values, found {} cells", cells.len()),
            ));
        }
        if cells[0] != classes.name(rows) {
            return Err(parse_err(
                lineno,
                format!("row {rows} is labelled {:?}, expected {:?}", cells[0], classes.name(rows)),
            ));
        }
        for (j, cell) in cells[1..].iter().enumerate() {
            let v: f64 = cell
                .parse()
                .map_err(|_| parse_err(lineno, format!("non-numeric value {cell:?} in column {}", classes.name(j))))?;
            values.push(v);
        }
        rows += 1;
    }
    if rows != n {
        return Err(parse_err(text.lines().count(), format!("found {rows} data rows, expected {n}")));
    }
    PenaltyMatrix::new(classes, values, Provenance::File)
}
