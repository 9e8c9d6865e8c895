use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    Auroc,
    Prauc,
}

impl MetricKind {
    pub const ALL: [MetricKind; 2] = [MetricKind::Auroc, MetricKind::Prauc];

    pub fn name(self) -> &'static str {
        match self {
            MetricKind::Auroc => "auroc",
            MetricKind::Prauc => "prauc",
        }
    }

    pub fn evaluate(self, scores: &[f64], labels: &[bool]) -> Result<f64> {
        match self {
            MetricKind::Auroc => auroc(scores, labels),
            MetricKind::Prauc => prauc(scores, labels),
        }
    }
}

impl std::str::FromStr for MetricKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auroc" => Ok(MetricKind::Auroc),
            "prauc" => Ok(MetricKind::Prauc),
            other => Err(Error::InvalidArgument(format!("unknown metric '{other}'"))),
        }
    }
}

fn check(scores: &[f64], labels: &[bool]) -> Result<(usize, usize)> {
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            got: scores.len(),
        });
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::NonFinite("metric scores".into()));
    }
    let pos = labels.iter().filter(|&&y| y).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::UndefinedMetric("labels contain a single class".into()));
    }
    Ok((pos, neg))
}

/// Indices sorted by ascending score, grouped into runs of equal score.
fn tied_groups(scores: &[f64]) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for i in order {
        match groups.last_mut() {
            Some(g) if scores[g[0]] == scores[i] => g.push(i),
            _ => groups.push(vec![i]),
        }
    }
    groups
}

/// P(score⁺ > score⁻) + ½ P(tie), via the midrank form of the Mann–Whitney U.
pub fn auroc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    let (pos, neg) = check(scores, labels)?;
    let mut rank_sum = 0.0;
    let mut seen = 0usize;
    for g in tied_groups(scores) {
        let mid = seen as f64 + (g.len() as f64 + 1.0) / 2.0;
        rank_sum += mid * g.iter().filter(|&&i| labels[i]).count() as f64;
        seen += g.len();
    }
    let p = pos as f64;
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * neg as f64))
}

/// Average precision. Tied scores form a single threshold step.
pub fn prauc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    let (pos, _) = check(scores, labels)?;
    let (mut tp, mut fp, mut ap) = (0usize, 0usize, 0.0);
    for g in tied_groups(scores).into_iter().rev() {
        let gp = g.iter().filter(|&&i| labels[i]).count();
        tp += gp;
        fp += g.len() - gp;
        if gp > 0 {
            ap += (gp as f64 / pos as f64) * (tp as f64 / (tp + fp) as f64);
        }
    }
    Ok(ap)
}

/// Kendall's tau-b. `None` when either input is entirely tied.
pub fn kendall_tau_b(x: &[f64], y: &[f64]) -> Result<Option<f64>> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::InvalidArgument("kendall tau needs >= 2 pairs".into()));
    }
    let (mut concordant, mut discordant) = (0i64, 0i64);
    let (mut tie_x, mut tie_y) = (0i64, 0i64);
    let n = x.len();
    for i in 0..n {
        for j in i + 1..n {
            let dx = x[i].partial_cmp(&x[j]);
            let dy = y[i].partial_cmp(&y[j]);
            let (Some(dx), Some(dy)) = (dx, dy) else {
                return Err(Error::NonFinite("kendall tau input".into()));
            };
            use std::cmp::Ordering::Equal;
            match (dx, dy) {
                (Equal, Equal) => {}
                (Equal, _) => tie_x += 1,
                (_, Equal) => tie_y += 1,
                (a, b) if a == b => concordant += 1,
                _ => discordant += 1,
            }
        }
    }
    let n_x = (concordant + discordant + tie_y) as f64;
    let n_y = (concordant + discordant + tie_x) as f64;
    if n_x == 0.0 || n_y == 0.0 {
        return Ok(None);
    }
    Ok(Some((concordant - discordant) as f64 / (n_x * n_y).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn auroc_examples() {
        let y = [false, false, true, true];
        assert_eq!(auroc(&[0.1, 0.2, 0.8, 0.9], &y).unwrap(), 1.0);
        assert_eq!(auroc(&[0.5; 4], &y).unwrap(), 0.5);
        assert!((auroc(&[0.1, 0.4, 0.35, 0.8], &y).unwrap() - 0.75).abs() < 1e-12);
    }

    #[test]
    fn single_class_is_undefined() {
        assert!(matches!(
            auroc(&[0.1, 0.2], &[true, true]),
            Err(Error::UndefinedMetric(_))
        ));
        assert!(prauc(&[0.1, 0.2], &[false, false]).is_err());
    }

    #[test]
    fn prauc_extremes() {
        let y = [false, true, false, true, true];
        assert_eq!(prauc(&[0.0, 1.0, 0.1, 0.9, 0.8], &y).unwrap(), 1.0);
        assert_eq!(prauc(&[0.3; 5], &y).unwrap(), 0.6);
    }

    #[test]
    fn prauc_hand_example() {
        // ranks: 0.9(+) 0.8(-) 0.7(+) 0.1(-): AP = ½·1 + ½·⅔
        let ap = prauc(&[0.9, 0.8, 0.7, 0.1], &[true, false, true, false]).unwrap();
        assert!((ap - (0.5 + 1.0 / 3.0)).abs() < 1e-15);
    }

    #[test]
    fn tau_examples() {
        let a = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(kendall_tau_b(&a, &[2.0, 5.0, 7.0, 9.0]).unwrap(), Some(1.0));
        assert_eq!(kendall_tau_b(&a, &[9.0, 7.0, 5.0, 2.0]).unwrap(), Some(-1.0));
        let t = kendall_tau_b(&[1.0, 2.0, 3.0], &[1.0, 3.0, 2.0]).unwrap().unwrap();
        assert!((t - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(kendall_tau_b(&a, &[1.0; 4]).unwrap(), None);
    }
}
