//! Two-sample tests used to confirm dataset shift, and kernel density
//! estimates for distribution plots.

mod kde;
mod shift;
pub mod special;

pub use kde::{kde, KdeCurve};
pub use shift::{shift_tests, ColumnShift};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use special::{chi_square_sf, ln_choose, student_t_two_sided};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestKind {
    WelchT,
    ChiSquare,
    FisherExact,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestFlag {
    /// Both samples had zero variance.
    Degenerate,
    /// Cochran's rule asked for an exact test on a table larger than 2x2.
    ChiSquareFallback,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub test_kind: TestKind,
    pub statistic: f64,
    /// Degrees of freedom (Welch and chi-square only).
    pub dof: Option<f64>,
    pub p_value: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<TestFlag>,
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, v)
}

/// Welch's unequal-variance t-test, two-sided.
pub fn welch_t(a: &[f64], b: &[f64]) -> Result<TestResult> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::InvalidArgument(
            "each sample needs at least 2 values".into(),
        ));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("welch_t sample".into()));
    }
    let (ma, va) = mean_var(a);
    let (mb, vb) = mean_var(b);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (sa, sb) = (va / na, vb / nb);
    let se2 = sa + sb;
    if se2 == 0.0 {
        let same = ma == mb;
        return Ok(TestResult {
            test_kind: TestKind::WelchT,
            statistic: if same { 0.0 } else { f64::INFINITY.copysign(ma - mb) },
            dof: Some(na + nb - 2.0),
            p_value: if same { 1.0 } else { 0.0 },
            flags: vec![TestFlag::Degenerate],
        });
    }
    let t = (ma - mb) / se2.sqrt();
    let dof = se2 * se2 / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
    Ok(TestResult {
        test_kind: TestKind::WelchT,
        statistic: t,
        dof: Some(dof),
        p_value: student_t_two_sided(t, dof),
        flags: Vec::new(),
    })
}

/// Row totals, column totals and grand total, rejecting empty margins.
fn margins(table: &[Vec<u64>]) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    let cols = table.first().map_or(0, Vec::len);
    if table.len() < 2 || cols < 2 || table.iter().any(|r| r.len() != cols) {
        return Err(Error::UnsupportedShape(
            "contingency table must be rectangular and at least 2x2".into(),
        ));
    }
    let rows: Vec<f64> = table.iter().map(|r| r.iter().sum::<u64>() as f64).collect();
    let colsum: Vec<f64> = (0..cols)
        .map(|j| table.iter().map(|r| r[j]).sum::<u64>() as f64)
        .collect();
    if rows.iter().chain(&colsum).any(|&m| m == 0.0) {
        return Err(Error::InvalidArgument(
            "contingency table has an all-zero margin".into(),
        ));
    }
    let total = rows.iter().sum();
    Ok((rows, colsum, total))
}

fn expected_counts(table: &[Vec<u64>]) -> Result<Vec<f64>> {
    let (rows, cols, total) = margins(table)?;
    Ok(rows
        .iter()
        .flat_map(|r| cols.iter().map(move |c| r * c / total))
        .collect())
}

/// Pearson chi-square test of independence (no continuity correction).
pub fn chi_square_test(table: &[Vec<u64>]) -> Result<TestResult> {
    let expected = expected_counts(table)?;
    let stat: f64 = table
        .iter()
        .flatten()
        .zip(&expected)
        .map(|(&o, &e)| (o as f64 - e).powi(2) / e)
        .sum();
    let dof = ((table.len() - 1) * (table[0].len() - 1)) as f64;
    Ok(TestResult {
        test_kind: TestKind::ChiSquare,
        statistic: stat,
        dof: Some(dof),
        p_value: chi_square_sf(stat, dof),
        flags: Vec::new(),
    })
}

/// Two-sided Fisher exact test on a 2x2 table. The statistic is the sample
/// odds ratio.
pub fn fisher_exact_2x2(table: &[Vec<u64>]) -> Result<TestResult> {
    if table.len() != 2 || table.iter().any(|r| r.len() != 2) {
        return Err(Error::UnsupportedShape(
            "Fisher's exact test is implemented for 2x2 tables only".into(),
        ));
    }
    margins(table)?;
    let (a, b, c, d) = (table[0][0], table[0][1], table[1][0], table[1][1]);
    let row1 = a + b;
    let col1 = a + c;
    let n = a + b + c + d;
    let ln_denom = ln_choose(n, col1);
    let ln_p = |x: u64| ln_choose(row1, x) + ln_choose(n - row1, col1 - x) - ln_denom;
    let observed = ln_p(a);
    let lo = (row1 + col1).saturating_sub(n);
    let hi = row1.min(col1);
    // relative slack so tables tied with the observed one count despite rounding
    let cut = observed + 1e-7_f64.ln_1p();
    let p: f64 = (lo..=hi)
        .map(ln_p)
        .filter(|&lp| lp <= cut)
        .map(f64::exp)
        .sum();
    let odds = (a as f64 * d as f64) / (b as f64 * c as f64);
    Ok(TestResult {
        test_kind: TestKind::FisherExact,
        statistic: odds,
        dof: None,
        p_value: p.min(1.0),
        flags: Vec::new(),
    })
}

/// Whether Cochran's rule admits the chi-square approximation: every expected
/// count is at least 1 and at least 80% of them are at least 5.
pub fn cochran_allows_chi_square(table: &[Vec<u64>]) -> Result<bool> {
    let expected = expected_counts(table)?;
    let big = expected.iter().filter(|&&e| e >= 5.0).count();
    Ok(expected.iter().all(|&e| e >= 1.0) && big as f64 >= 0.8 * expected.len() as f64)
}

/// Chi-square when Cochran's rule allows it, otherwise Fisher for 2x2 tables;
/// larger tables stay on chi-square with a warning flag.
pub fn choose_test(table: &[Vec<u64>]) -> Result<TestResult> {
    if cochran_allows_chi_square(table)? {
        return chi_square_test(table);
    }
    if table.len() == 2 && table[0].len() == 2 {
        return fisher_exact_2x2(table);
    }
    let mut r = chi_square_test(table)?;
    r.flags.push(TestFlag::ChiSquareFallback);
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identical_samples() {
        let a = [1.0, 2.0, 4.0, 7.0];
        let r = welch_t(&a, &a).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert!((r.p_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_variance_cases() {
        let r = welch_t(&[3.0, 3.0], &[3.0, 3.0, 3.0]).unwrap();
        assert_eq!((r.statistic, r.p_value), (0.0, 1.0));
        let r = welch_t(&[3.0, 3.0], &[4.0, 4.0]).unwrap();
        assert_eq!(r.p_value, 0.0);
        assert_eq!(r.flags, vec![TestFlag::Degenerate]);
    }

    #[test]
    fn welch_reference() {
        // scipy.stats.ttest_ind(a, b, equal_var=False)
        let a = [1.0, 2.0, 3.0, 4.0, 5.0];
        let b = [2.0, 4.0, 6.0, 8.0, 10.0, 12.0];
        let r = welch_t(&a, &b).unwrap();
        assert!((r.statistic - -2.3763541031440183).abs() < 1e-10);
        assert!((r.dof.unwrap() - 6.972255729794934).abs() < 1e-10);
        assert!((r.p_value - 0.04928433820673049).abs() < 1e-10);
    }

    #[test]
    fn shifted_sample_is_significant() {
        let r = welch_t(&[0.0, 1.0, 2.0], &[10.0, 11.0, 12.0]).unwrap();
        assert!(r.p_value < 0.01);
    }

    #[test]
    fn independent_table() {
        let r = chi_square_test(&[vec![10, 10], vec![10, 10]]).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert!((r.p_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn chi_square_reference() {
        // scipy.stats.chi2_contingency(t, correction=False)
        let r = chi_square_test(&[vec![12, 30, 18], vec![25, 14, 21]]).unwrap();
        assert!((r.statistic - 10.616518616518617).abs() < 1e-10);
        assert!((r.p_value - 0.00495053658008458).abs() < 1e-12);
    }

    #[test]
    fn fisher_rejects_non_2x2() {
        assert!(matches!(
            fisher_exact_2x2(&[vec![1, 2, 3], vec![4, 5, 6]]),
            Err(Error::UnsupportedShape(_))
        ));
    }

    #[test]
    fn cochran_routes_small_expected_to_fisher() {
        // expected count of the top-left cell is 2 * 1 / 4 = 0.5
        let t = vec![vec![1, 1], vec![0, 2]];
        assert_eq!(choose_test(&t).unwrap().test_kind, TestKind::FisherExact);
        let big = vec![vec![30, 20], vec![25, 25]];
        assert_eq!(choose_test(&big).unwrap().test_kind, TestKind::ChiSquare);
        let wide = vec![vec![1, 0, 9], vec![0, 1, 9]];
        let r = choose_test(&wide).unwrap();
        assert_eq!(r.test_kind, TestKind::ChiSquare);
        assert_eq!(r.flags, vec![TestFlag::ChiSquareFallback]);
    }

    #[test]
    fn zero_margin_is_rejected() {
        assert!(chi_square_test(&[vec![0, 0], vec![1, 2]]).is_err());
    }

    proptest! {
        #[test]
        fn welch_antisymmetric(a in proptest::collection::vec(-50f64..50.0, 2..20),
                               b in proptest::collection::vec(-50f64..50.0, 2..20)) {
            let ab = welch_t(&a, &b).unwrap();
            let ba = welch_t(&b, &a).unwrap();
            prop_assert!((ab.statistic + ba.statistic).abs() < 1e-9 * ab.statistic.abs().max(1.0));
            prop_assert!((ab.p_value - ba.p_value).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&ab.p_value));
        }

        #[test]
        fn welch_permutation_invariant(mut a in proptest::collection::vec(-5f64..5.0, 3..12),
                                       b in proptest::collection::vec(-5f64..5.0, 3..12)) {
            let before = welch_t(&a, &b).unwrap();
            a.reverse();
            let after = welch_t(&a, &b).unwrap();
            prop_assert!((before.p_value - after.p_value).abs() < 1e-12);
        }

        #[test]
        fn chi_square_p_monotone(x in 0.0f64..60.0, dx in 0.0f64..10.0, dof in 1u32..12) {
            let lo = chi_square_sf(x, dof as f64);
            let hi = chi_square_sf(x + dx, dof as f64);
            prop_assert!(hi <= lo + 1e-15);
            prop_assert!((0.0..=1.0).contains(&lo));
        }

        #[test]
        fn fisher_transposition_invariant(a in 0u64..15, b in 0u64..15, c in 0u64..15, d in 0u64..15) {
            prop_assume!(a + b > 0 && c + d > 0 && a + c > 0 && b + d > 0);
            let p = fisher_exact_2x2(&[vec![a, b], vec![c, d]]).unwrap().p_value;
            let rows = fisher_exact_2x2(&[vec![c, d], vec![a, b]]).unwrap().p_value;
            let cols = fisher_exact_2x2(&[vec![b, a], vec![d, c]]).unwrap().p_value;
            let tr = fisher_exact_2x2(&[vec![a, c], vec![b, d]]).unwrap().p_value;
            prop_assert!((p - rows).abs() < 1e-12 && (p - cols).abs() < 1e-12 && (p - tr).abs() < 1e-12);
            prop_assert!(p > 0.0 && p <= 1.0);
        }
    }
}
