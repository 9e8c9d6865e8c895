use serde::{Deserialize, Serialize};

use super::{choose_test, welch_t, TestResult};
use crate::error::{Error, Result};
use crate::tabular::{ColumnKind, Table};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColumnShift {
    pub column: String,
    pub n_a: usize,
    pub n_b: usize,
    /// `None` when the column had too little data to test.
    pub result: Option<TestResult>,
}

/// Count table `2 × K` over the codes seen in either sample. Codes present in
/// neither sample are dropped so no margin is zero.
fn contingency(a: &[f64], b: &[f64]) -> Vec<Vec<u64>> {
    let mut codes: Vec<f64> = a.iter().chain(b).copied().collect();
    codes.sort_by(f64::total_cmp);
    codes.dedup();
    let count = |xs: &[f64]| codes.iter().map(|c| xs.iter().filter(|&&v| v == *c).count() as u64).collect();
    vec![count(a), count(b)]
}

/// Compares each column of two tables with the test the column kind calls
/// for: Welch's t for continuous columns, Cochran's rule for discrete ones.
/// Missing cells are ignored.
pub fn shift_tests(a: &Table, b: &Table) -> Result<Vec<ColumnShift>> {
    if !a.schema_matches(b) {
        return Err(Error::Schema("shift test needs tables with the same columns".into()));
    }
    a.columns()
        .iter()
        .enumerate()
        .map(|(c, meta)| {
            let (xa, xb) = (a.observed(c), b.observed(c));
            let result = match meta.kind {
                ColumnKind::Continuous => {
                    if xa.len() < 2 || xb.len() < 2 {
                        None
                    } else {
                        Some(welch_t(&xa, &xb)?)
                    }
                }
                ColumnKind::Categorical | ColumnKind::Boolean => {
                    let table = contingency(&xa, &xb);
                    if xa.is_empty() || xb.is_empty() || table[0].len() < 2 {
                        None
                    } else {
                        Some(choose_test(&table)?)
                    }
                }
            };
            Ok(ColumnShift {
                column: meta.name.clone(),
                n_a: xa.len(),
                n_b: xb.len(),
                result,
            })
        })
        .collect()
}
