//! Disease diagnosis and one-year onset labels from health-checkup tables.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::Table;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Disease {
    Diabetes,
    Dyslipidemia,
    Hypertension,
}

impl std::str::FromStr for Disease {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "diabetes" => Ok(Disease::Diabetes),
            "dyslipidemia" => Ok(Disease::Dyslipidemia),
            "hypertension" => Ok(Disease::Hypertension),
            other => Err(Error::InvalidArgument(format!("unknown disease '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Threshold {
    /// Fires when the value is `>=` the bound.
    AtLeast(f64),
    /// Fires when the value is strictly `<` the bound.
    Below(f64),
}

impl Threshold {
    fn fires(self, v: f64) -> bool {
        match self {
            Threshold::AtLeast(b) => v >= b,
            Threshold::Below(b) => v < b,
        }
    }

    fn bound(self) -> f64 {
        match self {
            Threshold::AtLeast(b) | Threshold::Below(b) => b,
        }
    }
}

/// One measurement criterion: `column` compared against `threshold`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rule {
    pub column: String,
    pub threshold: Threshold,
}

impl Rule {
    fn new(column: &str, threshold: Threshold) -> Self {
        Rule {
            column: column.to_string(),
            threshold,
        }
    }
}

/// Per-disease measurement rules plus a medication-flag column. A record is
/// diseased when any rule fires or the medication flag is set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiseaseCriteria {
    pub rules: Vec<Rule>,
    pub medication_column: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticCriteria {
    pub diabetes: DiseaseCriteria,
    pub dyslipidemia: DiseaseCriteria,
    pub hypertension: DiseaseCriteria,
}

impl Default for DiagnosticCriteria {
    fn default() -> Self {
        DiagnosticCriteria {
            diabetes: DiseaseCriteria {
                rules: vec![
                    Rule::new("hba1c", Threshold::AtLeast(6.5)),
                    Rule::new("fasting_glucose", Threshold::AtLeast(126.0)),
                ],
                medication_column: "diabetes_medication".into(),
            },
            dyslipidemia: DiseaseCriteria {
                rules: vec![
                    Rule::new("ldl", Threshold::AtLeast(120.0)),
                    Rule::new("hdl", Threshold::Below(40.0)),
                    Rule::new("triglycerides", Threshold::AtLeast(150.0)),
                ],
                medication_column: "dyslipidemia_medication".into(),
            },
            hypertension: DiseaseCriteria {
                rules: vec![
                    Rule::new("sbp", Threshold::AtLeast(140.0)),
                    Rule::new("dbp", Threshold::AtLeast(90.0)),
                ],
                medication_column: "hypertension_medication".into(),
            },
        }
    }
}

impl DiagnosticCriteria {
    /// Hypertension at 130/80 mmHg instead of 140/90.
    pub fn with_lowered_hypertension_threshold(mut self) -> Self {
        for rule in &mut self.hypertension.rules {
            rule.threshold = match rule.column.as_str() {
                "sbp" => Threshold::AtLeast(130.0),
                "dbp" => Threshold::AtLeast(80.0),
                _ => rule.threshold,
            };
        }
        self
    }

    pub fn for_disease(&self, disease: Disease) -> &DiseaseCriteria {
        match disease {
            Disease::Diabetes => &self.diabetes,
            Disease::Dyslipidemia => &self.dyslipidemia,
            Disease::Hypertension => &self.hypertension,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for c in [&self.diabetes, &self.dyslipidemia, &self.hypertension] {
            for r in &c.rules {
                let b = r.threshold.bound();
                if !(b > 0.0 && b.is_finite()) {
                    return Err(Error::InvalidArgument(format!(
                        "threshold for '{}' must be positive, got {b}",
                        r.column
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Diagnosis {
    Diseased,
    Healthy,
    /// A criterion cell was missing.
    Unlabelable,
}

pub fn diagnose(
    table: &Table,
    criteria: &DiagnosticCriteria,
    disease: Disease,
) -> Result<Vec<Diagnosis>> {
    criteria.validate()?;
    let spec = criteria.for_disease(disease);
    let rules = spec
        .rules
        .iter()
        .map(|r| Ok((table.column_index(&r.column)?, r.threshold)))
        .collect::<Result<Vec<_>>>()?;
    let med = table.column_index(&spec.medication_column)?;

    Ok((0..table.n_rows())
        .map(|row| {
            let Some(on_medication) = table.get(row, med) else {
                return Diagnosis::Unlabelable;
            };
            let mut diseased = on_medication != 0.0;
            for &(col, threshold) in &rules {
                match table.get(row, col) {
                    None => return Diagnosis::Unlabelable,
                    Some(v) => diseased |= threshold.fires(v),
                }
            }
            if diseased {
                Diagnosis::Diseased
            } else {
                Diagnosis::Healthy
            }
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExclusionReason {
    /// Already diseased at the baseline year.
    Prevalent,
    Unlabelable,
    NoFollowUp,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OnsetLabel {
    Onset,
    NoOnset,
    Excluded(ExclusionReason),
}

impl OnsetLabel {
    pub fn as_binary(self) -> Option<bool> {
        match self {
            OnsetLabel::Onset => Some(true),
            OnsetLabel::NoOnset => Some(false),
            OnsetLabel::Excluded(_) => None,
        }
    }
}

/// One label per row of the baseline-year table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OnsetLabeling {
    pub labels: Vec<OnsetLabel>,
    pub n_onset: usize,
    pub n_no_onset: usize,
    pub n_prevalent: usize,
    pub n_unlabelable: usize,
    pub n_no_follow_up: usize,
}

fn subject_index(table: &Table, subject_column: &str) -> Result<(usize, HashMap<String, usize>)> {
    let col = table.column_index(subject_column)?;
    let mut index = HashMap::with_capacity(table.n_rows());
    for r in 0..table.n_rows() {
        let Some(id) = table.token(r, col) else {
            continue;
        };
        if index.insert(id.clone(), r).is_some() {
            return Err(Error::InvalidArgument(format!(
                "subject '{id}' appears more than once in one year"
            )));
        }
    }
    Ok((col, index))
}

/// Labels each baseline-year subject by whether the disease appears at the
/// follow-up year. Prevalent and unlabelable cases are excluded.
pub fn onset_labels(
    year_t: &Table,
    year_t1: &Table,
    criteria: &DiagnosticCriteria,
    disease: Disease,
    subject_column: &str,
) -> Result<OnsetLabeling> {
    let base = diagnose(year_t, criteria, disease)?;
    let follow = diagnose(year_t1, criteria, disease)?;
    let (id_col, _) = subject_index(year_t, subject_column)?;
    let (_, follow_index) = subject_index(year_t1, subject_column)?;

    let labels: Vec<OnsetLabel> = (0..year_t.n_rows())
        .map(|r| {
            use ExclusionReason::*;
            match base[r] {
                Diagnosis::Diseased => return OnsetLabel::Excluded(Prevalent),
                Diagnosis::Unlabelable => return OnsetLabel::Excluded(Unlabelable),
                Diagnosis::Healthy => {}
            }
            let Some(next) = year_t
                .token(r, id_col)
                .and_then(|id| follow_index.get(&id).copied())
            else {
                return OnsetLabel::Excluded(NoFollowUp);
            };
            match follow[next] {
                Diagnosis::Diseased => OnsetLabel::Onset,
                Diagnosis::Healthy => OnsetLabel::NoOnset,
                Diagnosis::Unlabelable => OnsetLabel::Excluded(Unlabelable),
            }
        })
        .collect();

    let count = |want: OnsetLabel| labels.iter().filter(|&&l| l == want).count();
    Ok(OnsetLabeling {
        n_onset: count(OnsetLabel::Onset),
        n_no_onset: count(OnsetLabel::NoOnset),
        n_prevalent: count(OnsetLabel::Excluded(ExclusionReason::Prevalent)),
        n_unlabelable: count(OnsetLabel::Excluded(ExclusionReason::Unlabelable)),
        n_no_follow_up: count(OnsetLabel::Excluded(ExclusionReason::NoFollowUp)),
        labels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const DIABETES_COLS: [&str; 4] = ["id", "hba1c", "fasting_glucose", "diabetes_medication"];

    fn diabetes_table(rows: &[[f64; 4]]) -> Table {
        let rows: Vec<Vec<f64>> = rows.iter().map(|r| r.to_vec()).collect();
        Table::from_dense(&DIABETES_COLS, &rows).unwrap()
    }

    #[test]
    fn hba1c_boundary_is_inclusive() {
        let t = diabetes_table(&[[1.0, 6.5, 100.0, 0.0], [2.0, 6.49, 125.9, 0.0]]);
        let d = diagnose(&t, &DiagnosticCriteria::default(), Disease::Diabetes).unwrap();
        assert_eq!(d, vec![Diagnosis::Diseased, Diagnosis::Healthy]);
    }

    #[test]
    fn missing_cell_is_unlabelable() {
        let t = Table::from_options(
            DIABETES_COLS
                .iter()
                .map(|c| super::super::ColumnMeta::continuous(*c))
                .collect(),
            vec![vec![Some(1.0), None, Some(90.0), Some(0.0)]],
        )
        .unwrap();
        let d = diagnose(&t, &DiagnosticCriteria::default(), Disease::Diabetes).unwrap();
        assert_eq!(d, vec![Diagnosis::Unlabelable]);
    }

    #[test]
    fn missing_criterion_column_errors() {
        let t = Table::from_dense(&["id", "hba1c"], &[vec![1.0, 5.0]]).unwrap();
        assert!(matches!(
            diagnose(&t, &DiagnosticCriteria::default(), Disease::Diabetes),
            Err(Error::MissingColumn(_))
        ));
    }

    #[test]
    fn lowered_hypertension_threshold() {
        let t = Table::from_dense(
            &["sbp", "dbp", "hypertension_medication"],
            &[vec![130.0, 70.0, 0.0], vec![129.0, 79.0, 0.0]],
        )
        .unwrap();
        let c = DiagnosticCriteria::default().with_lowered_hypertension_threshold();
        let d = diagnose(&t, &c, Disease::Hypertension).unwrap();
        assert_eq!(d, vec![Diagnosis::Diseased, Diagnosis::Healthy]);
    }

    #[test]
    fn onset_cases() {
        let t0 = diabetes_table(&[
            [1.0, 5.5, 90.0, 0.0],
            [2.0, 5.5, 90.0, 0.0],
            [3.0, 7.0, 90.0, 0.0],
            [4.0, 5.5, 90.0, 0.0],
        ]);
        let t1 = diabetes_table(&[
            [2.0, 5.6, 95.0, 0.0],
            [1.0, 6.6, 95.0, 0.0],
            [3.0, 7.0, 90.0, 1.0],
        ]);
        let l = onset_labels(&t0, &t1, &DiagnosticCriteria::default(), Disease::Diabetes, "id")
            .unwrap();
        assert_eq!(
            l.labels,
            vec![
                OnsetLabel::Onset,
                OnsetLabel::NoOnset,
                OnsetLabel::Excluded(ExclusionReason::Prevalent),
                OnsetLabel::Excluded(ExclusionReason::NoFollowUp),
            ]
        );
        assert_eq!(l.n_no_follow_up, 1);
    }

    #[test]
    fn duplicate_subject_errors() {
        let t = diabetes_table(&[[1.0, 5.5, 90.0, 0.0], [1.0, 5.5, 90.0, 0.0]]);
        assert!(onset_labels(&t, &t, &DiagnosticCriteria::default(), Disease::Diabetes, "id").is_err());
    }

    #[test]
    fn same_year_twice_never_yields_onset() {
        let t = diabetes_table(&[
            [1.0, 5.5, 90.0, 0.0],
            [2.0, 6.8, 90.0, 0.0],
            [3.0, 5.0, 130.0, 0.0],
            [4.0, 5.0, 100.0, 1.0],
        ]);
        let l = onset_labels(&t, &t, &DiagnosticCriteria::default(), Disease::Diabetes, "id")
            .unwrap();
        assert_eq!(l.n_onset, 0);
        assert_eq!(l.n_no_onset, 1);
    }

    #[test]
    fn nonpositive_threshold_is_rejected() {
        let mut c = DiagnosticCriteria::default();
        c.diabetes.rules[0].threshold = Threshold::AtLeast(0.0);
        assert!(c.validate().is_err());
    }
}
