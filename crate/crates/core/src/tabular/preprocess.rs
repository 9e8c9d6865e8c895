use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{ColumnKind, Table};
use crate::error::{Error, Result};

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Most frequent code; ties go to the smallest code.
fn mode(xs: &[f64]) -> f64 {
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut best = (sorted[0], 0usize);
    let mut i = 0;
    while i < sorted.len() {
        let j = sorted[i..].iter().take_while(|&&v| v == sorted[i]).count();
        if j > best.1 {
            best = (sorted[i], j);
        }
        i += j;
    }
    best.0
}

fn fill_values(source: &Table) -> Result<Vec<f64>> {
    (0..source.n_cols())
        .map(|c| {
            let obs = source.observed(c);
            if obs.is_empty() {
                return Err(Error::EmptyColumn(source.columns()[c].name.clone()));
            }
            Ok(match source.columns()[c].kind {
                ColumnKind::Continuous => mean(&obs),
                ColumnKind::Categorical | ColumnKind::Boolean => mode(&obs),
            })
        })
        .collect()
}

/// Fills missing continuous cells with the source column mean and missing
/// categorical/boolean cells with the source mode. Observed cells are untouched.
pub fn impute_mean(table: &Table, source: &Table) -> Result<Table> {
    if !table.schema_matches(source) {
        return Err(Error::Schema("imputation source has a different schema".into()));
    }
    let fill = fill_values(source)?;
    let n = table.n_cols();
    let values: Vec<f64> = table
        .values()
        .iter()
        .zip(table.missing_mask())
        .enumerate()
        .map(|(i, (&v, &m))| if m { fill[i % n] } else { v })
        .collect();
    Table::new(
        table.columns().to_vec(),
        table.n_rows(),
        values,
        vec![false; table.n_rows() * n],
    )
}

/// Per-column z-scoring of continuous columns. Other columns pass through.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    names: Vec<String>,
    /// `(mean, std)` for continuous columns, `None` otherwise.
    params: Vec<Option<(f64, f64)>>,
}

impl Standardizer {
    /// Population mean/std over observed cells. A constant column gets std 1.
    pub fn fit(table: &Table) -> Result<Self> {
        if table.n_rows() < 2 {
            return Err(Error::InvalidArgument(
                "standardizer needs at least 2 rows".into(),
            ));
        }
        let params = table
            .columns()
            .iter()
            .enumerate()
            .map(|(c, meta)| {
                if meta.kind != ColumnKind::Continuous {
                    return Ok(None);
                }
                let obs = table.observed(c);
                if obs.is_empty() {
                    return Err(Error::EmptyColumn(meta.name.clone()));
                }
                let mu = mean(&obs);
                let var = obs.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / obs.len() as f64;
                let sd = var.sqrt();
                Ok(Some((mu, if sd > 0.0 && sd.is_finite() { sd } else { 1.0 })))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Standardizer {
            names: table.column_names().iter().map(|s| s.to_string()).collect(),
            params,
        })
    }

    pub fn params(&self) -> &[Option<(f64, f64)>] {
        &self.params
    }

    fn check(&self, table: &Table) -> Result<()> {
        if table.n_cols() != self.names.len()
            || table.column_names().iter().zip(&self.names).any(|(a, b)| a != b)
        {
            return Err(Error::Schema(
                "table columns differ from the fitted standardizer".into(),
            ));
        }
        Ok(())
    }

    fn map(&self, table: &Table, f: impl Fn(f64, f64, f64) -> f64) -> Result<Table> {
        self.check(table)?;
        let n = table.n_cols();
        let values = table
            .values()
            .iter()
            .enumerate()
            .map(|(i, &v)| match self.params[i % n] {
                Some((mu, sd)) if !v.is_nan() => f(v, mu, sd),
                _ => v,
            })
            .collect();
        Table::new(
            table.columns().to_vec(),
            table.n_rows(),
            values,
            table.missing_mask().to_vec(),
        )
    }

    pub fn apply(&self, table: &Table) -> Result<Table> {
        self.map(table, |v, mu, sd| (v - mu) / sd)
    }

    pub fn invert(&self, table: &Table) -> Result<Table> {
        self.map(table, |v, mu, sd| v * sd + mu)
    }
}

/// Fitted transform from a [`Table`] to the dense matrix neural models
/// consume: impute, standardize continuous columns, one-hot categoricals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Preprocessor {
    fill: Vec<f64>,
    standardizer: Standardizer,
    /// Category count per column (0 for non-categorical).
    one_hot: Vec<usize>,
}

impl Preprocessor {
    pub fn fit(train: &Table) -> Result<Self> {
        let fill = fill_values(train)?;
        let standardizer = Standardizer::fit(train)?;
        let one_hot = train
            .columns()
            .iter()
            .map(|c| match c.kind {
                ColumnKind::Categorical => c.categories.len(),
                _ => 0,
            })
            .collect();
        Ok(Preprocessor {
            fill,
            standardizer,
            one_hot,
        })
    }

    pub fn output_width(&self) -> usize {
        self.one_hot.iter().map(|&k| k.max(1)).sum()
    }

    pub fn transform(&self, table: &Table) -> Result<Array2<f64>> {
        self.standardizer.check(table)?;
        let width = self.output_width();
        let mut out = Array2::zeros((table.n_rows(), width));
        for r in 0..table.n_rows() {
            let mut j = 0;
            for c in 0..table.n_cols() {
                let v = table.get(r, c).unwrap_or(self.fill[c]);
                match (self.one_hot[c], self.standardizer.params[c]) {
                    (0, Some((mu, sd))) => {
                        out[[r, j]] = (v - mu) / sd;
                        j += 1;
                    }
                    (0, None) => {
                        out[[r, j]] = v;
                        j += 1;
                    }
                    (k, _) => {
                        // unseen categories encode as all zeros
                        let code = v as usize;
                        if code < k {
                            out[[r, j + code]] = 1.0;
                        }
                        j += k;
                    }
                }
            }
        }
        Ok(out)
    }
}
