use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{MetricKind, RejectionCurve};
use crate::error::{Error, Result};

pub const REPORT_FORMAT_VERSION: u32 = 1;

/// Headline numbers of one method's curve for one metric.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveSummary {
    pub method: String,
    pub metric: MetricKind,
    pub baseline: f64,
    pub peak_metric: f64,
    pub rejection_rate_at_peak: f64,
    pub improvement: f64,
    pub tau_b: f64,
    /// Threshold that attains the peak on the evaluated scores.
    pub peak_threshold: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodCurve {
    pub method: String,
    pub curve: RejectionCurve,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OdropReport {
    pub format_version: u32,
    pub summaries: Vec<CurveSummary>,
    pub curves: Vec<MethodCurve>,
}

impl CurveSummary {
    pub fn of(method: &str, curve: &RejectionCurve) -> Self {
        let peak_threshold = curve
            .point_at(curve.peak_rate)
            .map(|p| p.threshold)
            .unwrap_or(f64::MAX);
        CurveSummary {
            method: method.to_string(),
            metric: curve.metric_kind,
            baseline: curve.baseline,
            peak_metric: curve.peak_metric,
            rejection_rate_at_peak: curve.peak_rate,
            improvement: curve.improvement(),
            tau_b: curve.tau_b,
            peak_threshold,
        }
    }
}

impl OdropReport {
    pub fn new(curves: Vec<MethodCurve>) -> Self {
        OdropReport {
            format_version: REPORT_FORMAT_VERSION,
            summaries: curves
                .iter()
                .map(|c| CurveSummary::of(&c.method, &c.curve))
                .collect(),
            curves,
        }
    }

    pub fn summary(&self, method: &str, metric: MetricKind) -> Option<&CurveSummary> {
        self.summaries
            .iter()
            .find(|s| s.method == method && s.metric == metric)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let r: OdropReport = serde_json::from_str(text)?;
        if r.format_version != REPORT_FORMAT_VERSION {
            return Err(Error::FormatVersion {
                found: r.format_version,
                expected: REPORT_FORMAT_VERSION,
            });
        }
        Ok(r)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }
}

/// `rate,metric,n_retained` rows of a curve.
pub fn curve_csv(curve: &RejectionCurve) -> String {
    let mut out = String::from("rate,achieved_rate,threshold,metric,n_retained\n");
    for p in &curve.points {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            p.rate, p.achieved_rate, p.threshold, p.metric, p.n_retained
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::odrop::{default_rate_grid, rejection_curve};

    #[test]
    fn improvement_is_peak_minus_baseline() {
        let ood: Vec<f64> = (0..40).map(|i| (i % 7) as f64).collect();
        let pred: Vec<f64> = (0..40).map(|i| ((i * 13) % 17) as f64).collect();
        let labels: Vec<bool> = (0..40).map(|i| i % 3 == 0).collect();
        let c = rejection_curve(&ood, &pred, &labels, MetricKind::Auroc, &default_rate_grid()).unwrap();
        let r = OdropReport::new(vec![MethodCurve {
            method: "m".into(),
            curve: c.clone(),
        }]);
        let s = r.summary("m", MetricKind::Auroc).unwrap();
        assert_eq!(s.improvement, s.peak_metric - s.baseline);
        assert_eq!(s.rejection_rate_at_peak, c.peak_rate);
        let back = OdropReport::from_json(&r.to_json().unwrap()).unwrap();
        assert_eq!(back, r);
        assert_eq!(curve_csv(&c).lines().count(), c.points.len() + 1);
    }
}
