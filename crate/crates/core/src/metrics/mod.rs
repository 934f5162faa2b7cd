//! Segmentation metrics: Dice, classic and modified Hausdorff distance, and
//! mean ± std reports.
//!
//! Distances are taken over full class pixel sets (not extracted
//! boundaries), in pixel units.

mod distance;
mod report;

pub use distance::{dice_score, hausdorff, squared_distance_transform, HausdorffVariant};
pub use report::{
    aggregate_report, parse_report_csv, render_table, render_table_labeled, report_csv, rows_to_csv, sample_metrics, ClassMetrics,
    MetricsReport, ReportRow, Summary, OVERALL, REPORT_HEADER,
};
