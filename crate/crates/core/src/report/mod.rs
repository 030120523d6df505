//! Regression metrics, cross-model percent-change comparison and report files.

mod compare;
mod emit;
mod metrics;

pub use compare::{compare_models, pct_change, CompareError, Comparison, ComparisonRow, Metric};
pub use emit::{comparison_csv, comparison_svg, emit_report, format_sig, metrics_csv, ReportError, PCT_CLIP};
pub use metrics::{
    aggregate_seeds, compute_metrics, mean_std, variance_explained_view, MetricsError, MetricsReport, TaskMetrics,
    TaskSummary,
};
