use serde::{Deserialize, Serialize};

use super::metrics::{kendall_tau_b, MetricKind};
use crate::error::{Error, Result};

/// Curves are evaluated up to this rejection rate.
pub const MAX_REJECTION_RATE: f64 = 0.4;

/// `{0.00, 0.01, …, 0.40}`.
pub fn default_rate_grid() -> Vec<f64> {
    (0..=40).map(|i| i as f64 / 100.0).collect()
}

/// Smallest score value `v` such that at most `floor(rate·n)` scores lie
/// strictly above it. Ties at the cut are kept, so the achieved rate never
/// exceeds the requested one.
pub fn threshold_for_rate(scores: &[f64], rate: f64) -> Result<f64> {
    if scores.is_empty() {
        return Err(Error::InvalidArgument("no scores to threshold".into()));
    }
    if !(0.0..=1.0).contains(&rate) {
        return Err(Error::InvalidArgument(format!("rate {rate} outside [0, 1]")));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFinite("ood scores".into()));
    }
    let allowed = (rate * scores.len() as f64 + 1e-9).floor() as usize;
    let mut sorted = scores.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut best = sorted[0];
    for (i, &v) in sorted.iter().enumerate() {
        if i > allowed {
            break;
        }
        // i scores are strictly greater than the first occurrence of v
        if i == 0 || v < sorted[i - 1] {
            best = v;
        }
    }
    Ok(best)
}

/// Rows scoring strictly above `threshold` are rejected. Returns the
/// retained-row mask and the rejection rate.
pub fn partition(scores: &[f64], threshold: f64) -> (Vec<bool>, f64) {
    let keep: Vec<bool> = scores.iter().map(|&s| s <= threshold).collect();
    let rejected = keep.iter().filter(|&&k| !k).count();
    let rate = if scores.is_empty() {
        0.0
    } else {
        rejected as f64 / scores.len() as f64
    };
    (keep, rate)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    /// Requested rejection rate from the grid.
    pub rate: f64,
    pub achieved_rate: f64,
    pub threshold: f64,
    pub metric: f64,
    pub n_retained: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CurveFlag {
    /// The retained set at this rate lost a class; the point was dropped.
    SingleClassDropped { rate: f64 },
    /// Tau-b was undefined (fewer than two points or a constant series).
    TauUndefined,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RejectionCurve {
    pub metric_kind: MetricKind,
    pub points: Vec<CurvePoint>,
    pub baseline: f64,
    pub peak_rate: f64,
    pub peak_metric: f64,
    pub tau_b: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<CurveFlag>,
}

impl RejectionCurve {
    pub fn improvement(&self) -> f64 {
        self.peak_metric - self.baseline
    }

    pub fn point_at(&self, rate: f64) -> Option<&CurvePoint> {
        self.points.iter().find(|p| (p.rate - rate).abs() < 1e-12)
    }
}

/// How thresholds are chosen for each grid rate.
#[derive(Clone, Copy, Debug)]
pub enum ThresholdSource<'a> {
    /// Quantiles of the evaluated scores themselves.
    Evaluated,
    /// Quantiles of a reference sample, e.g. training-set scores, giving
    /// deployment-style fixed thresholds.
    Reference(&'a [f64]),
}

/// Metric on retained rows at each grid rate, thresholds taken from the
/// evaluated scores.
pub fn rejection_curve(
    ood_scores: &[f64],
    predictor_scores: &[f64],
    labels: &[bool],
    metric_kind: MetricKind,
    rate_grid: &[f64],
) -> Result<RejectionCurve> {
    rejection_curve_with(
        ood_scores,
        predictor_scores,
        labels,
        metric_kind,
        rate_grid,
        ThresholdSource::Evaluated,
    )
}

pub fn rejection_curve_with(
    ood_scores: &[f64],
    predictor_scores: &[f64],
    labels: &[bool],
    metric_kind: MetricKind,
    rate_grid: &[f64],
    source: ThresholdSource<'_>,
) -> Result<RejectionCurve> {
    let n = labels.len();
    for len in [ood_scores.len(), predictor_scores.len()] {
        if len != n {
            return Err(Error::DimensionMismatch { expected: n, got: len });
        }
    }
    if rate_grid.is_empty() {
        return Err(Error::InvalidArgument("empty rate grid".into()));
    }
    if rate_grid.windows(2).any(|w| w[1] <= w[0])
        || rate_grid.iter().any(|r| !(0.0..=MAX_REJECTION_RATE + 1e-12).contains(r))
    {
        return Err(Error::InvalidArgument(format!(
            "rate grid must be strictly increasing within [0, {MAX_REJECTION_RATE}]"
        )));
    }
    let reference = match source {
        ThresholdSource::Evaluated => ood_scores,
        ThresholdSource::Reference(r) => r,
    };
    let baseline = metric_kind.evaluate(predictor_scores, labels)?;

    let mut points = Vec::with_capacity(rate_grid.len());
    let mut flags = Vec::new();
    for &rate in rate_grid {
        let threshold = threshold_for_rate(reference, rate)?;
        let (keep, achieved_rate) = partition(ood_scores, threshold);
        let (s, y): (Vec<f64>, Vec<bool>) = (0..n)
            .filter(|&i| keep[i])
            .map(|i| (predictor_scores[i], labels[i]))
            .unzip();
        match metric_kind.evaluate(&s, &y) {
            Ok(metric) => points.push(CurvePoint {
                rate,
                achieved_rate,
                threshold,
                metric,
                n_retained: s.len(),
            }),
            Err(Error::UndefinedMetric(_)) => flags.push(CurveFlag::SingleClassDropped { rate }),
            Err(e) => return Err(e),
        }
    }
    if points.is_empty() {
        return Err(Error::UndefinedMetric(
            "every grid point lost a class".into(),
        ));
    }

    let mut peak = &points[0];
    for p in &points[1..] {
        if p.metric > peak.metric {
            peak = p;
        }
    }
    let (peak_rate, peak_metric) = (peak.rate, peak.metric);

    let tau = if points.len() >= 2 {
        let r: Vec<f64> = points.iter().map(|p| p.rate).collect();
        let m: Vec<f64> = points.iter().map(|p| p.metric).collect();
        kendall_tau_b(&r, &m)?
    } else {
        None
    };
    if tau.is_none() {
        flags.push(CurveFlag::TauUndefined);
    }

    Ok(RejectionCurve {
        metric_kind,
        points,
        baseline,
        peak_rate,
        peak_metric,
        tau_b: tau.unwrap_or(0.0),
        flags,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_examples() {
        let s = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(threshold_for_rate(&s, 0.0).unwrap(), 4.0);
        let t = threshold_for_rate(&s, 0.25).unwrap();
        assert!((3.0..4.0).contains(&t));
        assert_eq!(partition(&s, t).0, vec![true, true, true, false]);
        for rate in [0.1, 0.25, 0.39] {
            let t = threshold_for_rate(&[2.0; 7], rate).unwrap();
            assert_eq!(partition(&[2.0; 7], t).1, 0.0);
        }
        assert!(threshold_for_rate(&[], 0.1).is_err());
    }

    #[test]
    fn threshold_matches_cut_enumeration() {
        let s = [5.0, 1.0, 3.0, 3.0, 3.0, 2.0, 9.0, 0.0, 3.0, 7.0];
        for step in 0..=10 {
            let rate = step as f64 / 10.0;
            let t = threshold_for_rate(&s, rate).unwrap();
            let allowed = (rate * 10.0 + 1e-9).floor() as usize;
            // oracle: smallest observed value whose strict upper count fits
            let mut cands: Vec<f64> = s
                .iter()
                .copied()
                .filter(|&v| s.iter().filter(|&&x| x > v).count() <= allowed)
                .collect();
            cands.sort_by(f64::total_cmp);
            assert_eq!(t, cands[0], "rate {rate}");
        }
    }

    #[test]
    fn partition_rates() {
        let s: Vec<f64> = (0..100).map(f64::from).collect();
        assert_eq!(partition(&s, 1000.0).1, 0.0);
        assert_eq!(partition(&s, 74.0).1, 0.25);
        assert_eq!(partition(&s, f64::MIN).1, 1.0);
    }

    #[test]
    fn single_point_grid() {
        let y = [false, true, false, true];
        let p = [0.1, 0.9, 0.4, 0.6];
        let c = rejection_curve(&[0.0, 1.0, 2.0, 3.0], &p, &y, MetricKind::Auroc, &[0.0]).unwrap();
        assert_eq!(c.points.len(), 1);
        assert_eq!(c.points[0].metric, c.baseline);
        assert_eq!(c.tau_b, 0.0);
        assert_eq!(c.flags, vec![CurveFlag::TauUndefined]);
    }

    #[test]
    fn class_loss_drops_point() {
        // the only positive has the highest OOD score
        let y = [false, false, false, true];
        let p = [0.1, 0.2, 0.3, 0.9];
        let ood = [0.0, 1.0, 2.0, 3.0];
        let c = rejection_curve(&ood, &p, &y, MetricKind::Auroc, &[0.0, 0.25]).unwrap();
        assert_eq!(c.points.len(), 1);
        assert!(c
            .flags
            .contains(&CurveFlag::SingleClassDropped { rate: 0.25 }));
    }

    #[test]
    fn rejecting_noise_raises_metric() {
        let y = [false, true, false, true, true, false];
        let p = [0.1, 0.9, 0.2, 0.8, 0.05, 0.95];
        let ood = [0.0, 0.0, 0.0, 0.0, 1.0, 1.0];
        let c = rejection_curve(&ood, &p, &y, MetricKind::Auroc, &[0.0, 0.2, 0.34]).unwrap();
        assert!(c.baseline < 1.0);
        assert_eq!(c.points[2].metric, 1.0);
        assert_eq!(c.peak_rate, 0.34);
        assert_eq!(c.improvement(), 1.0 - c.baseline);
    }

    #[test]
    fn grid_is_validated() {
        let y = [false, true];
        let p = [0.2, 0.8];
        assert!(rejection_curve(&p, &p, &y, MetricKind::Auroc, &[0.0, 0.5]).is_err());
        assert!(rejection_curve(&p, &p, &y, MetricKind::Auroc, &[0.1, 0.1]).is_err());
        assert_eq!(default_rate_grid().len(), 41);
    }
}
