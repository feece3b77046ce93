//! Strategy sweeps over planning instances, and the reports they produce.

pub mod experiment;
pub mod report;

pub use experiment::{run_experiment, RunMetrics, RunRecord};
pub use report::{emit_report, parse_csv, CsvRow, ReportFormat};
