use nalgebra::{DMatrix, DVector};
use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use super::formulas::logsumexp;
use crate::error::{Error, Result};

/// Source of the feature vector `h(x)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureLayer {
    /// Last hidden layer of the classifier.
    #[default]
    Penultimate,
}

/// Class-conditional Gaussians with a shared covariance in feature space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GemParams {
    pub layer: FeatureLayer,
    pub dim: usize,
    pub means: Vec<Vec<f64>>,
    /// Row-major `dim × dim` pooled covariance before regularization.
    pub covariance: Vec<f64>,
    /// Ridge added to the diagonal before inversion.
    pub epsilon: f64,
    /// Row-major inverse of `covariance + epsilon·I`.
    pub precision: Vec<f64>,
}

fn invert_spd(cov: &DMatrix<f64>, epsilon: f64) -> Option<DMatrix<f64>> {
    let n = cov.nrows();
    let reg = cov + DMatrix::identity(n, n) * epsilon;
    let inv = reg.cholesky()?.inverse();
    inv.iter().all(|v| v.is_finite()).then_some(inv)
}

impl GemParams {
    /// Inverts `covariance + epsilon·I` exactly as given.
    pub fn new(means: Vec<Vec<f64>>, covariance: Vec<f64>, epsilon: f64) -> Result<Self> {
        let dim = means.first().map_or(0, Vec::len);
        if dim == 0 || means.iter().any(|m| m.len() != dim) || covariance.len() != dim * dim {
            return Err(Error::InvalidArgument("inconsistent GEM parameter shapes".into()));
        }
        let cov = DMatrix::from_row_slice(dim, dim, &covariance);
        let inv = invert_spd(&cov, epsilon).ok_or(Error::SingularCovariance(epsilon))?;
        Ok(GemParams {
            layer: FeatureLayer::Penultimate,
            dim,
            means,
            covariance,
            epsilon,
            precision: inv.transpose().iter().copied().collect(),
        })
    }

    pub fn k(&self) -> usize {
        self.means.len()
    }

    /// `(h − μ_j)ᵀ Σ⁻¹ (h − μ_j)` for every class.
    pub fn mahalanobis(&self, h: &[f64]) -> Result<Vec<f64>> {
        if h.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: h.len(),
            });
        }
        let p = DMatrix::from_row_slice(self.dim, self.dim, &self.precision);
        Ok(self
            .means
            .iter()
            .map(|mu| {
                let d = DVector::from_iterator(self.dim, h.iter().zip(mu).map(|(a, b)| a - b));
                d.dot(&(&p * &d))
            })
            .collect())
    }

    /// `log Σ_j exp(−½ d_j)`; larger for in-distribution features.
    pub fn raw_gem(&self, h: &[f64]) -> Result<f64> {
        let d = self.mahalanobis(h)?;
        let terms: Vec<f64> = d.iter().map(|v| -0.5 * v).collect();
        Ok(logsumexp(&terms))
    }
}

/// Rows of `h` belonging to `class`, sorted lexicographically so that sums
/// do not depend on the input row order.
fn canonical_rows(h: ArrayView2<f64>, classes: &[usize], class: usize) -> Vec<Vec<f64>> {
    let mut rows: Vec<Vec<f64>> = (0..h.nrows())
        .filter(|&r| classes[r] == class)
        .map(|r| h.row(r).to_vec())
        .collect();
    rows.sort_by(|a, b| {
        a.iter()
            .zip(b)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    rows
}

/// Per-class means and the pooled covariance (normalized by the total row
/// count), regularized with `ε = 1e-6·trace/dim`, raised tenfold up to
/// `1e-2·trace/dim` until the Cholesky factorization succeeds.
pub fn fit_gem_features(h: ArrayView2<f64>, classes: &[usize], k: usize) -> Result<GemParams> {
    let (n, dim) = h.dim();
    if classes.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: classes.len(),
        });
    }
    if dim == 0 || k == 0 {
        return Err(Error::InvalidArgument("GEM needs features and classes".into()));
    }
    if let Some(&bad) = classes.iter().find(|&&c| c >= k) {
        return Err(Error::InvalidArgument(format!("class {bad} out of range for k = {k}")));
    }
    if h.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("GEM features".into()));
    }
    let mut means = Vec::with_capacity(k);
    let mut cov = vec![0.0; dim * dim];
    for c in 0..k {
        let rows = canonical_rows(h, classes, c);
        if rows.is_empty() {
            return Err(Error::SingleClass);
        }
        let mut mu = vec![0.0; dim];
        for r in &rows {
            for (m, v) in mu.iter_mut().zip(r) {
                *m += v;
            }
        }
        mu.iter_mut().for_each(|m| *m /= rows.len() as f64);
        for r in &rows {
            for i in 0..dim {
                let di = r[i] - mu[i];
                for j in 0..dim {
                    cov[i * dim + j] += di * (r[j] - mu[j]);
                }
            }
        }
        means.push(mu);
    }
    cov.iter_mut().for_each(|v| *v /= n as f64);

    let trace: f64 = (0..dim).map(|i| cov[i * dim + i]).sum();
    let scale = if trace > 0.0 { trace / dim as f64 } else { 1.0 };
    let mut epsilon = 1e-6 * scale;
    loop {
        match GemParams::new(means.clone(), cov.clone(), epsilon) {
            Ok(p) => return Ok(p),
            Err(Error::SingularCovariance(_)) if epsilon < 1e-2 * scale * 0.999 => epsilon *= 10.0,
            Err(e) => return Err(e),
        }
    }
}
