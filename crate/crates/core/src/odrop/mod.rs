//! Threshold-based rejection of OOD records and evaluation of the retained set.

mod baseline;
mod curve;
mod metrics;
mod report;

pub use baseline::{cv_baseline, cv_baseline_with_folds, CvBaseline};
pub use curve::{
    default_rate_grid, partition, rejection_curve, rejection_curve_with, threshold_for_rate,
    CurveFlag, CurvePoint, RejectionCurve, ThresholdSource, MAX_REJECTION_RATE,
};
pub use metrics::{auroc, kendall_tau_b, prauc, MetricKind};
pub use report::{curve_csv, CurveSummary, MethodCurve, OdropReport, REPORT_FORMAT_VERSION};
