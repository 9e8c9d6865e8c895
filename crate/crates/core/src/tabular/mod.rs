//! Column-typed tabular data with an explicit missing-value mask.
//!
//! A [`Table`] is immutable once built. Values are stored row-major; missing
//! cells hold `NaN` in the value buffer and `true` in the mask, and no `NaN`
//! ever appears under a `false` mask bit.

mod csv_io;
mod diagnosis;
mod folds;
mod preprocess;

pub use csv_io::{load_csv, load_csv_with_sidecar, read_csv, sidecar_path, write_csv, TableMeta};
pub use diagnosis::{
    diagnose, onset_labels, Diagnosis, DiagnosticCriteria, Disease, ExclusionReason, OnsetLabel,
    OnsetLabeling, Rule, Threshold,
};
pub use folds::{stratified_folds, FoldAssignment};
pub use preprocess::{impute_mean, Preprocessor, Standardizer};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Continuous,
    Categorical,
    Boolean,
}

/// Name, kind, and (for categorical columns) the code → token map.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnMeta {
    pub name: String,
    pub kind: ColumnKind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub categories: Vec<String>,
}

impl ColumnMeta {
    pub fn continuous(name: impl Into<String>) -> Self {
        ColumnMeta {
            name: name.into(),
            kind: ColumnKind::Continuous,
            categories: Vec::new(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Table {
    columns: Vec<ColumnMeta>,
    n_rows: usize,
    values: Vec<f64>,
    missing: Vec<bool>,
}

impl Table {
    /// Builds a table from row-major buffers, checking every invariant.
    pub fn new(
        columns: Vec<ColumnMeta>,
        n_rows: usize,
        values: Vec<f64>,
        missing: Vec<bool>,
    ) -> Result<Self> {
        let n_cols = columns.len();
        if values.len() != n_rows * n_cols || missing.len() != n_rows * n_cols {
            return Err(Error::Schema(format!(
                "expected {} cells for {n_rows} x {n_cols}, got {} values and {} mask bits",
                n_rows * n_cols,
                values.len(),
                missing.len()
            )));
        }
        for (i, (&v, &m)) in values.iter().zip(&missing).enumerate() {
            if m {
                continue;
            }
            let col = &columns[i % n_cols.max(1)];
            if !v.is_finite() {
                return Err(Error::NonFinite(format!(
                    "row {}, column '{}'",
                    i / n_cols + 1,
                    col.name
                )));
            }
            match col.kind {
                ColumnKind::Categorical => {
                    if v < 0.0 || v.fract() != 0.0 || v as usize >= col.categories.len().max(1) {
                        return Err(Error::Schema(format!(
                            "column '{}' holds invalid categorical code {v}",
                            col.name
                        )));
                    }
                }
                ColumnKind::Boolean => {
                    if v != 0.0 && v != 1.0 {
                        return Err(Error::Schema(format!(
                            "column '{}' holds non-boolean value {v}",
                            col.name
                        )));
                    }
                }
                ColumnKind::Continuous => {}
            }
        }
        let values = values
            .into_iter()
            .zip(&missing)
            .map(|(v, &m)| if m { f64::NAN } else { v })
            .collect();
        Ok(Table {
            columns,
            n_rows,
            values,
            missing,
        })
    }

    /// All-continuous table from dense rows.
    pub fn from_dense(names: &[&str], rows: &[Vec<f64>]) -> Result<Self> {
        let columns = names.iter().map(|n| ColumnMeta::continuous(*n)).collect();
        Self::from_options(
            columns,
            rows.iter()
                .map(|r| r.iter().map(|&v| Some(v)).collect())
                .collect(),
        )
    }

    /// Table from rows of optional cells (`None` = missing).
    pub fn from_options(columns: Vec<ColumnMeta>, rows: Vec<Vec<Option<f64>>>) -> Result<Self> {
        let n_cols = columns.len();
        let n_rows = rows.len();
        let mut values = Vec::with_capacity(n_rows * n_cols);
        let mut missing = Vec::with_capacity(n_rows * n_cols);
        for (r, row) in rows.into_iter().enumerate() {
            if row.len() != n_cols {
                return Err(Error::Parse {
                    row: r + 1,
                    column: None,
                    message: format!("expected {n_cols} cells, found {}", row.len()),
                });
            }
            for cell in row {
                values.push(cell.unwrap_or(f64::NAN));
                missing.push(cell.is_none());
            }
        }
        Self::new(columns, n_rows, values, missing)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[ColumnMeta] {
        &self.columns
    }

    pub fn column_names(&self) -> Vec<&str> {
        self.columns.iter().map(|c| c.name.as_str()).collect()
    }

    pub fn column_kinds(&self) -> Vec<ColumnKind> {
        self.columns.iter().map(|c| c.kind).collect()
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c.name == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    }

    pub fn get(&self, row: usize, col: usize) -> Option<f64> {
        let i = row * self.n_cols() + col;
        if self.missing[i] {
            None
        } else {
            Some(self.values[i])
        }
    }

    pub fn is_missing(&self, row: usize, col: usize) -> bool {
        self.missing[row * self.n_cols() + col]
    }

    /// Row-major values; missing cells are `NaN`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn missing_mask(&self) -> &[bool] {
        &self.missing
    }

    pub fn row(&self, row: usize) -> &[f64] {
        let n = self.n_cols();
        &self.values[row * n..(row + 1) * n]
    }

    pub fn column(&self, col: usize) -> impl Iterator<Item = Option<f64>> + '_ {
        (0..self.n_rows).map(move |r| self.get(r, col))
    }

    /// Observed (non-missing) values of one column.
    pub fn observed(&self, col: usize) -> Vec<f64> {
        self.column(col).flatten().collect()
    }

    pub fn missing_fraction(&self, col: usize) -> f64 {
        if self.n_rows == 0 {
            return 0.0;
        }
        let n = self.column(col).filter(Option::is_none).count();
        n as f64 / self.n_rows as f64
    }

    /// Text form of a cell as it would appear in CSV.
    pub fn token(&self, row: usize, col: usize) -> Option<String> {
        let v = self.get(row, col)?;
        let meta = &self.columns[col];
        Some(match meta.kind {
            ColumnKind::Continuous => format!("{v}"),
            ColumnKind::Boolean => if v != 0.0 { "true" } else { "false" }.to_string(),
            ColumnKind::Categorical => meta.categories[v as usize].clone(),
        })
    }

    pub fn select_columns(&self, cols: &[usize]) -> Result<Table> {
        let n = self.n_cols();
        if let Some(&bad) = cols.iter().find(|&&c| c >= n) {
            return Err(Error::InvalidArgument(format!(
                "column index {bad} out of range for {n} columns"
            )));
        }
        let columns = cols.iter().map(|&c| self.columns[c].clone()).collect();
        let mut values = Vec::with_capacity(self.n_rows * cols.len());
        let mut missing = Vec::with_capacity(self.n_rows * cols.len());
        for r in 0..self.n_rows {
            for &c in cols {
                values.push(self.values[r * n + c]);
                missing.push(self.missing[r * n + c]);
            }
        }
        Ok(Table {
            columns,
            n_rows: self.n_rows,
            values,
            missing,
        })
    }

    pub fn select_columns_by_name(&self, names: &[&str]) -> Result<Table> {
        let idx = names
            .iter()
            .map(|n| self.column_index(n))
            .collect::<Result<Vec<_>>>()?;
        self.select_columns(&idx)
    }

    /// All columns except the named ones.
    pub fn drop_columns(&self, names: &[&str]) -> Table {
        let keep: Vec<usize> = (0..self.n_cols())
            .filter(|&c| !names.contains(&self.columns[c].name.as_str()))
            .collect();
        self.select_columns(&keep).expect("indices in range")
    }

    pub fn select_rows(&self, rows: &[usize]) -> Table {
        let n = self.n_cols();
        let mut values = Vec::with_capacity(rows.len() * n);
        let mut missing = Vec::with_capacity(rows.len() * n);
        for &r in rows {
            values.extend_from_slice(&self.values[r * n..(r + 1) * n]);
            missing.extend_from_slice(&self.missing[r * n..(r + 1) * n]);
        }
        Table {
            columns: self.columns.clone(),
            n_rows: rows.len(),
            values,
            missing,
        }
    }

    /// Appends a column; `cells` must have one entry per row.
    pub fn with_column(&self, meta: ColumnMeta, cells: &[Option<f64>]) -> Result<Table> {
        if cells.len() != self.n_rows {
            return Err(Error::DimensionMismatch {
                expected: self.n_rows,
                got: cells.len(),
            });
        }
        let n = self.n_cols();
        let mut columns = self.columns.clone();
        columns.push(meta);
        let mut values = Vec::with_capacity(self.n_rows * (n + 1));
        let mut missing = Vec::with_capacity(self.n_rows * (n + 1));
        for (r, cell) in cells.iter().enumerate() {
            for c in 0..n {
                values.push(self.values[r * n + c]);
                missing.push(self.missing[r * n + c]);
            }
            values.push(cell.unwrap_or(f64::NAN));
            missing.push(cell.is_none());
        }
        Table::new(columns, self.n_rows, values, missing)
    }

    /// Binary label vector read from a column; missing or non-binary cells error.
    pub fn binary_column(&self, name: &str) -> Result<Vec<bool>> {
        let c = self.column_index(name)?;
        self.column(c)
            .enumerate()
            .map(|(r, v)| match v {
                Some(x) if x == 0.0 => Ok(false),
                Some(x) if x == 1.0 => Ok(true),
                other => Err(Error::Parse {
                    row: r + 1,
                    column: Some(name.to_string()),
                    message: format!("expected a 0/1 label, found {other:?}"),
                }),
            })
            .collect()
    }

    pub fn schema_matches(&self, other: &Table) -> bool {
        self.columns.len() == other.columns.len()
            && self
                .columns
                .iter()
                .zip(&other.columns)
                .all(|(a, b)| a.name == b.name && a.kind == b.kind)
    }
}

impl PartialEq for Table {
    /// Missing cells compare equal regardless of the placeholder they hold.
    fn eq(&self, other: &Self) -> bool {
        self.columns == other.columns
            && self.n_rows == other.n_rows
            && self.missing == other.missing
            && self
                .values
                .iter()
                .zip(&other.values)
                .zip(&self.missing)
                .all(|((a, b), &m)| m || a == b)
    }
}

/// Keeps the columns whose missing fraction is strictly below the cut.
/// A cut of 1.0 or more keeps everything.
pub fn filter_columns_by_missingness(table: &Table, max_missing_fraction: f64) -> Table {
    let keep: Vec<usize> = (0..table.n_cols())
        .filter(|&c| max_missing_fraction >= 1.0 || table.missing_fraction(c) < max_missing_fraction)
        .collect();
    table.select_columns(&keep).expect("indices in range")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn with_missing() -> Table {
        Table::from_options(
            vec![
                ColumnMeta::continuous("a"),
                ColumnMeta::continuous("b"),
                ColumnMeta::continuous("c"),
            ],
            vec![
                vec![Some(1.0), None, None],
                vec![Some(2.0), Some(1.0), None],
                vec![Some(3.0), None, None],
                vec![Some(4.0), Some(2.0), Some(5.0)],
            ],
        )
        .unwrap()
    }

    #[test]
    fn nan_is_rejected_under_clear_mask() {
        let err = Table::new(
            vec![ColumnMeta::continuous("x")],
            1,
            vec![f64::NAN],
            vec![false],
        );
        assert!(err.is_err());
    }

    #[test]
    fn missingness_filter_is_strict() {
        let t = with_missing();
        let kept = filter_columns_by_missingness(&t, 0.5);
        // b is exactly 50% missing and must go
        assert_eq!(kept.column_names(), vec!["a"]);
        let all = filter_columns_by_missingness(&t, 1.0);
        assert_eq!(all.n_cols(), 3);
        let zero = filter_columns_by_missingness(&t, 0.0);
        assert_eq!(zero.n_cols(), 0);
    }

    #[test]
    fn categorical_codes_must_be_valid() {
        let meta = ColumnMeta {
            name: "sex".into(),
            kind: ColumnKind::Categorical,
            categories: vec!["f".into(), "m".into()],
        };
        assert!(Table::new(vec![meta.clone()], 1, vec![1.0], vec![false]).is_ok());
        assert!(Table::new(vec![meta.clone()], 1, vec![2.0], vec![false]).is_err());
        assert!(Table::new(vec![meta], 1, vec![0.5], vec![false]).is_err());
    }

    proptest! {
        #[test]
        fn missingness_filter_is_idempotent(
            mask in proptest::collection::vec(any::<bool>(), 24),
            cut in 0.0f64..1.0,
        ) {
            let rows: Vec<Vec<Option<f64>>> = mask
                .chunks(4)
                .map(|r| r.iter().enumerate().map(|(i, &m)| if m { None } else { Some(i as f64) }).collect())
                .collect();
            let cols = (0..4).map(|i| ColumnMeta::continuous(format!("c{i}"))).collect();
            let t = Table::from_options(cols, rows).unwrap();
            let once = filter_columns_by_missingness(&t, cut);
            let twice = filter_columns_by_missingness(&once, cut);
            prop_assert_eq!(once, twice);
        }
    }
}
