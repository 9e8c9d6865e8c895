//! SHAP attributions for boosted trees and Ward clustering of attribution rows.

mod heatmap;
mod shap;
mod ward;

pub use heatmap::{color_limit, diverging_color, heatmap_export, HeatmapFiles};
pub use shap::{base_value, tree_shap};
pub use ward::{ward_cluster, Dendrogram, Merge};

use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gbt::Forest;
use crate::tabular::Table;

/// Per-record attributions in log-odds units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapMatrix {
    pub feature_names: Vec<String>,
    pub row_ids: Vec<usize>,
    pub base_value: f64,
    pub values: Vec<Vec<f64>>,
    pub ood_flags: Vec<bool>,
}

impl ShapMatrix {
    pub fn n_rows(&self) -> usize {
        self.values.len()
    }

    pub fn n_cols(&self) -> usize {
        self.feature_names.len()
    }

    fn flat(&self) -> Vec<f64> {
        self.values.iter().flatten().copied().collect()
    }

    /// Mean absolute attribution per feature.
    pub fn mean_abs(&self) -> Vec<f64> {
        let n = self.n_rows().max(1) as f64;
        (0..self.n_cols())
            .map(|j| self.values.iter().map(|r| r[j].abs()).sum::<f64>() / n)
            .collect()
    }
}

/// Attributions of every row in `table`, flagging rows whose OOD score is
/// above `threshold`.
pub fn shap_matrix(
    forest: &Forest,
    table: &Table,
    ood_scores: &[f64],
    threshold: f64,
) -> Result<ShapMatrix> {
    if ood_scores.len() != table.n_rows() {
        return Err(Error::DimensionMismatch {
            expected: table.n_rows(),
            got: ood_scores.len(),
        });
    }
    forest.check(table)?;
    let base_value = base_value(forest)?;
    let values = (0..table.n_rows())
        .into_par_iter()
        .map(|r| tree_shap(forest, table.row(r)).map(|(phi, _)| phi))
        .collect::<Result<Vec<_>>>()?;
    Ok(ShapMatrix {
        feature_names: forest.feature_names.clone(),
        row_ids: (0..table.n_rows()).collect(),
        base_value,
        values,
        ood_flags: ood_scores.iter().map(|&s| s > threshold).collect(),
    })
}

/// What a feature is represented by when clustering columns.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnProfile {
    /// The feature's |SHAP| values over all rows.
    #[default]
    Absolute,
    /// The feature's signed SHAP values over all rows.
    Raw,
}

impl FromStr for ColumnProfile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "absolute" | "abs" => Ok(ColumnProfile::Absolute),
            "raw" => Ok(ColumnProfile::Raw),
            other => Err(Error::InvalidArgument(format!(
                "unknown column profile '{other}'"
            ))),
        }
    }
}

pub fn cluster_rows(shap: &ShapMatrix) -> Result<Dendrogram> {
    ward_cluster(&shap.flat(), shap.n_rows(), shap.n_cols())
}

pub fn cluster_columns(shap: &ShapMatrix, profile: ColumnProfile) -> Result<Dendrogram> {
    let (n, m) = (shap.n_rows(), shap.n_cols());
    let mut t = Vec::with_capacity(n * m);
    for j in 0..m {
        t.extend(shap.values.iter().map(|r| match profile {
            ColumnProfile::Absolute => r[j].abs(),
            ColumnProfile::Raw => r[j],
        }));
    }
    ward_cluster(&t, m, n)
}
