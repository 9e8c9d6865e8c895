//! Second-order gradient boosting of regression trees on the logistic loss,
//! with learned default directions for missing values.

mod fit;
mod search;
mod tree;

pub use search::{grid_search, rfe, GridPoint, GridResult, GridSpec};
pub use tree::{Node, Tree, MAX_LEAF_WEIGHT};

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tabular::Table;
use fit::{build_tree, Presorted};

pub const FOREST_FORMAT_VERSION: u32 = 1;

/// Margins are clamped to this magnitude before the sigmoid so that
/// probabilities stay strictly inside (0, 1).
const MAX_MARGIN: f64 = 36.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoostConfig {
    pub n_estimators: usize,
    pub max_depth: usize,
    /// Minimum hessian sum in each child of a split.
    pub min_child_weight: f64,
    pub lambda: f64,
    pub eta: f64,
    /// Recorded for provenance; the exact greedy learner draws no randomness.
    pub seed: u64,
}

impl Default for BoostConfig {
    fn default() -> Self {
        BoostConfig {
            n_estimators: 100,
            max_depth: 4,
            min_child_weight: 1.0,
            lambda: 1.0,
            eta: 0.3,
            seed: 0,
        }
    }
}

impl BoostConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.into()));
        if self.n_estimators == 0 {
            return bad("n_estimators must be >= 1");
        }
        if self.max_depth == 0 {
            return bad("max_depth must be >= 1");
        }
        if !(self.min_child_weight >= 0.0) {
            return bad("min_child_weight must be >= 0");
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad("lambda must be >= 0");
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return bad("eta must lie in (0, 1]");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub format_version: u32,
    pub feature_names: Vec<String>,
    pub base_score: f64,
    pub config: BoostConfig,
    pub trees: Vec<Tree>,
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn check_labels(labels: &[bool], n_rows: usize) -> Result<usize> {
    if labels.len() != n_rows {
        return Err(Error::DimensionMismatch {
            expected: n_rows,
            got: labels.len(),
        });
    }
    let pos = labels.iter().filter(|&&y| y).count();
    if pos == 0 || pos == labels.len() {
        return Err(Error::SingleClass);
    }
    Ok(pos)
}

/// Fits a forest. Missing cells (`NaN` in the table) are routed by learned
/// default directions.
pub fn fit_gbt(features: &Table, labels: &[bool], config: &BoostConfig) -> Result<Forest> {
    fit_with_callback(features, labels, config, |_, _| {})
}

/// As [`fit_gbt`], calling `on_round(round, margins)` after each tree.
pub fn fit_with_callback(
    features: &Table,
    labels: &[bool],
    config: &BoostConfig,
    mut on_round: impl FnMut(usize, &[f64]),
) -> Result<Forest> {
    config.validate()?;
    let n = features.n_rows();
    let pos = check_labels(labels, n)?;
    let prior = pos as f64 / n as f64;
    let base_score = (prior / (1.0 - prior)).ln();

    let data = Presorted::new(features.values(), n, features.n_cols());
    let mut margin = vec![base_score; n];
    let mut grad = vec![0.0; n];
    let mut hess = vec![0.0; n];
    let mut trees = Vec::with_capacity(config.n_estimators);
    for round in 0..config.n_estimators {
        for i in 0..n {
            let p = sigmoid(margin[i]);
            grad[i] = p - f64::from(u8::from(labels[i]));
            hess[i] = (p * (1.0 - p)).max(1e-16);
        }
        let tree = build_tree(&data, &grad, &hess, config);
        for (i, m) in margin.iter_mut().enumerate() {
            *m += config.eta * tree.predict(features.row(i));
        }
        trees.push(tree);
        on_round(round, &margin);
    }
    Ok(Forest {
        format_version: FOREST_FORMAT_VERSION,
        feature_names: features.column_names().iter().map(|s| s.to_string()).collect(),
        base_score,
        config: config.clone(),
        trees,
    })
}

impl Forest {
    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    /// `base_score + η·Σ tree outputs` for one row (`NaN` = missing).
    pub fn margin_row(&self, row: &[f64]) -> f64 {
        self.base_score + self.config.eta * self.trees.iter().map(|t| t.predict(row)).sum::<f64>()
    }

    pub(crate) fn check(&self, table: &Table) -> Result<()> {
        if table.n_cols() != self.n_features() {
            return Err(Error::DimensionMismatch {
                expected: self.n_features(),
                got: table.n_cols(),
            });
        }
        if table
            .column_names()
            .iter()
            .zip(&self.feature_names)
            .any(|(a, b)| a != b)
        {
            return Err(Error::Schema("feature names differ from the fitted forest".into()));
        }
        Ok(())
    }

    pub fn predict_margin(&self, table: &Table) -> Result<Vec<f64>> {
        self.check(table)?;
        Ok((0..table.n_rows()).map(|r| self.margin_row(table.row(r))).collect())
    }

    pub fn predict_proba(&self, table: &Table) -> Result<Vec<f64>> {
        Ok(self
            .predict_margin(table)?
            .into_iter()
            .map(|m| sigmoid(m.clamp(-MAX_MARGIN, MAX_MARGIN)))
            .collect())
    }

    /// The first `n` trees.
    pub fn truncated(&self, n: usize) -> Forest {
        let mut f = self.clone();
        f.trees.truncate(n);
        f.config.n_estimators = f.trees.len();
        f
    }

    /// Total split gain per feature.
    pub fn gain_importance(&self) -> Vec<f64> {
        let mut total = vec![0.0; self.n_features()];
        for node in self.trees.iter().flat_map(|t| &t.nodes) {
            if let Node::Split { feature, gain, .. } = node {
                total[*feature] += gain;
            }
        }
        total
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Forest> {
        let forest: Forest = serde_json::from_str(text)?;
        if forest.format_version != FOREST_FORMAT_VERSION {
            return Err(Error::FormatVersion {
                found: forest.format_version,
                expected: FOREST_FORMAT_VERSION,
            });
        }
        if forest.trees.iter().any(|t| !t.is_well_formed(forest.n_features())) {
            return Err(Error::Schema("forest contains a malformed tree".into()));
        }
        Ok(forest)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Forest> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Forest::from_json(&text)
    }
}

#[cfg(test)]
mod tests;
