//! Aggregation of per-sample metrics into mean ± std reports, plus the
//! report CSV and its aligned-table rendering.
//!
//! CSV columns: `dataset_variant,class,metric,mean,std,n`. A class with no
//! defined values has empty `mean` and `std` and `n = 0`.

use std::fmt::{self, Write as _};

use super::distance::{dice_score, hausdorff, HausdorffVariant};
use crate::error::{Error, Result};
use crate::grid::LabelMap;
use crate::penalty::ClassSet;

pub const REPORT_HEADER: &str = "dataset_variant,class,metric,mean,std,n";
pub const OVERALL: &str = "overall";

/// Metrics of one class in one sample. `None` marks an undefined value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassMetrics {
    pub class: usize,
    pub dice: Option<f64>,
    pub hausdorff: Option<f64>,
    pub variant: HausdorffVariant,
}

/// Dice and Hausdorff for every class id `0..classes`.
pub fn sample_metrics(
    pred: &LabelMap,
    truth: &LabelMap,
    classes: usize,
    variant: HausdorffVariant,
) -> Result<Vec<ClassMetrics>> {
    (0..classes)
        .map(|c| {
            Ok(ClassMetrics {
                class: c,
                dice: Some(dice_score(pred, truth, c as u8)?),
                hausdorff: hausdorff(pred, truth, c as u8, variant)?,
                variant,
            })
        })
        .collect()
}

/// Mean and sample standard deviation (`n − 1` denominator, 0 when `n = 1`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
    /// Entries that were undefined and left out.
    pub undefined: usize,
}

impl Summary {
    /// `None` when no value is defined.
    pub fn of(values: impl IntoIterator<Item = Option<f64>>) -> Option<Summary> {
        let mut defined = Vec::new();
        let mut undefined = 0;
        for v in values {
            match v {
                Some(x) => defined.push(x),
                None => undefined += 1,
            }
        }
        let n = defined.len();
        if n == 0 {
            return None;
        }
        let mean = defined.iter().sum::<f64>() / n as f64;
        let std = if n == 1 {
            0.0
        } else {
            (defined.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        };
        Some(Summary { mean, std, n, undefined })
    }
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.3} ± {:.3}", self.mean, self.std)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub classes: ClassSet,
    pub variant: HausdorffVariant,
    pub samples: Vec<Vec<ClassMetrics>>,
    /// Per class; `None` flags a class with no defined value.
    pub dice: Vec<Option<Summary>>,
    pub hausdorff: Vec<Option<Summary>>,
    /// Across samples of each sample's mean over unflagged classes.
    pub overall_dice: Option<Summary>,
    pub overall_hausdorff: Option<Summary>,
}

fn overall(samples: &[Vec<ClassMetrics>], flagged: &[bool], pick: fn(&ClassMetrics) -> Option<f64>) -> Option<Summary> {
    Summary::of(samples.iter().map(|s| {
        let vals: Vec<f64> = s.iter().filter(|m| !flagged[m.class]).filter_map(pick).collect();
        (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
    }))
}

pub fn aggregate_report(classes: &ClassSet, samples: Vec<Vec<ClassMetrics>>) -> Result<MetricsReport> {
    let n = classes.len();
    if samples.is_empty() {
        return Err(Error::Validation("no samples to aggregate".into()));
    }
    let variant = samples[0].first().map(|m| m.variant).unwrap_or_default();
    for s in &samples {
        if s.len() != n || s.iter().enumerate().any(|(c, m)| m.class != c || m.variant != variant) {
            return Err(Error::Validation(format!(
                "each sample needs metrics for classes 0..{n} in order, with one Hausdorff variant"
            )));
        }
    }
    let per_class = |pick: fn(&ClassMetrics) -> Option<f64>| -> Vec<Option<Summary>> {
        (0..n).map(|c| Summary::of(samples.iter().map(|s| pick(&s[c])))).collect()
    };
    let dice = per_class(|m| m.dice);
    let hd = per_class(|m| m.hausdorff);
    let dice_flag: Vec<bool> = dice.iter().map(Option::is_none).collect();
    let hd_flag: Vec<bool> = hd.iter().map(Option::is_none).collect();
    Ok(MetricsReport {
        classes: classes.clone(),
        variant,
        overall_dice: overall(&samples, &dice_flag, |m| m.dice),
        overall_hausdorff: overall(&samples, &hd_flag, |m| m.hausdorff),
        samples,
        dice,
        hausdorff: hd,
    })
}

impl MetricsReport {
    pub fn hausdorff_metric_name(&self) -> String {
        format!("hausdorff_{}", self.variant)
    }

    /// Rows in CSV order: per class then overall, Dice before Hausdorff.
    pub fn rows(&self, dataset_variant: &str) -> Vec<ReportRow> {
        let hd_name = self.hausdorff_metric_name();
        let mut out = Vec::new();
        let mut push = |class: &str, metric: &str, s: Option<Summary>| {
            out.push(ReportRow {
                dataset_variant: dataset_variant.to_string(),
                class: class.to_string(),
                metric: metric.to_string(),
                mean: s.map(|s| s.mean),
                std: s.map(|s| s.std),
                n: s.map_or(0, |s| s.n),
            });
        };
        for c in 0..self.classes.len() {
            push(self.classes.name(c), "dice", self.dice[c]);
            push(self.classes.name(c), &hd_name, self.hausdorff[c]);
        }
        push(OVERALL, "dice", self.overall_dice);
        push(OVERALL, &hd_name, self.overall_hausdorff);
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub dataset_variant: String,
    pub class: String,
    pub metric: String,
    pub mean: Option<f64>,
    pub std: Option<f64>,
    pub n: usize,
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn rows_to_csv(rows: &[ReportRow]) -> String {
    let mut out = format!("{REPORT_HEADER}\n");
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.dataset_variant,
            r.class,
            r.metric,
            opt(r.mean),
            opt(r.std),
            r.n
        )
        .unwrap();
    }
    out
}

/// One CSV covering several dataset variants.
pub fn report_csv(reports: &[(String, MetricsReport)]) -> String {
    let rows: Vec<ReportRow> = reports.iter().flat_map(|(name, r)| r.rows(name)).collect();
    rows_to_csv(&rows)
}

pub fn parse_report_csv(text: &str, origin: &str) -> Result<Vec<ReportRow>> {
    let err = |line: usize, msg: String| Error::Parse {
        path: origin.to_string(),
        line,
        msg,
    };
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(REPORT_HEADER) {
        return Err(err(1, format!("expected header {REPORT_HEADER:?}")));
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let ln = i + 2;
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 6 {
            return Err(err(ln, format!("expected 6 fields, found {}", cells.len())));
        }
        let num = |s: &str| -> Result<Option<f64>> {
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse().map(Some).map_err(|_| err(ln, format!("bad number {s:?}")))
            }
        };
        rows.push(ReportRow {
            dataset_variant: cells[0].to_string(),
            class: cells[1].to_string(),
            metric: cells[2].to_string(),
            mean: num(cells[3])?,
            std: num(cells[4])?,
            n: cells[5].parse().map_err(|_| err(ln, format!("bad count {:?}", cells[5])))?,
        });
    }
    Ok(rows)
}

fn first_seen<'a>(it: impl Iterator<Item = &'a str>) -> Vec<&'a str> {
    let mut out: Vec<&str> = Vec::new();
    for s in it {
        if !out.contains(&s) {
            out.push(s);
        }
    }
    out
}

/// One aligned table per metric: classes down, dataset variants across,
/// cells `mean ± std` (or `n/a` for flagged classes).
pub fn render_table(rows: &[ReportRow]) -> String {
    render_table_labeled(rows, "class")
}

/// [`render_table`] with `row_label` heading the first column.
pub fn render_table_labeled(rows: &[ReportRow], row_label: &str) -> String {
    let variants = first_seen(rows.iter().map(|r| r.dataset_variant.as_str()));
    let metrics = first_seen(rows.iter().map(|r| r.metric.as_str()));
    let mut out = String::new();
    for metric in metrics {
        let classes = first_seen(rows.iter().filter(|r| r.metric == metric).map(|r| r.class.as_str()));
        let mut grid: Vec<Vec<String>> = vec![std::iter::once(row_label)
            .chain(variants.iter().copied())
            .map(String::from)
            .collect()];
        for class in &classes {
            let mut line = vec![class.to_string()];
            for v in &variants {
                let cell = rows
                    .iter()
                    .find(|r| r.metric == metric && &r.class == class && &r.dataset_variant == v)
                    .map(|r| match (r.mean, r.std) {
                        (Some(m), Some(s)) => format!("{m:.3} ± {s:.3}"),
                        _ => "n/a".to_string(),
                    })
                    .unwrap_or_else(|| "-".to_string());
                line.push(cell);
            }
            grid.push(line);
        }
        let widths: Vec<usize> = (0..=variants.len())
            .map(|k| grid.iter().map(|l| l[k].chars().count()).max().unwrap_or(0))
            .collect();
        writeln!(out, "metric: {metric}").unwrap();
        for (i, line) in grid.iter().enumerate() {
            let cells: Vec<String> = line
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(k, (c, &w))| {
                    let pad = w - c.chars().count();
                    if k == 0 {
                        format!("{c}{}", " ".repeat(pad))
                    } else {
                        format!("{}{c}", " ".repeat(pad))
                    }
                })
                .collect();
            writeln!(out, "{}", cells.join("  ").trim_end()).unwrap();
            if i == 0 {
                let total = widths.iter().sum::<usize>() + 2 * variants.len();
                writeln!(out, "{}", "-".repeat(total)).unwrap();
            }
        }
        out.push('\n');
    }
    out
}
