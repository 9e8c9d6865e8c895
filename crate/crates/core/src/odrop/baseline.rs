use serde::{Deserialize, Serialize};

use super::metrics::{auroc, prauc};
use crate::error::Result;
use crate::gbt::{fit_gbt, BoostConfig};
use crate::tabular::{stratified_folds, FoldAssignment, Table};

/// Fold-wise AUROC and PRAUC with mean and population std.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvBaseline {
    pub fold_auroc: Vec<f64>,
    pub fold_prauc: Vec<f64>,
    pub auroc_mean: f64,
    pub auroc_std: f64,
    pub prauc_mean: f64,
    pub prauc_std: f64,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

pub fn cv_baseline(
    table: &Table,
    labels: &[bool],
    config: &BoostConfig,
    k: usize,
    seed: u64,
) -> Result<CvBaseline> {
    let folds = stratified_folds(labels, k, seed)?;
    cv_baseline_with_folds(table, labels, config, &folds)
}

pub fn cv_baseline_with_folds(
    table: &Table,
    labels: &[bool],
    config: &BoostConfig,
    folds: &FoldAssignment,
) -> Result<CvBaseline> {
    let mut fold_auroc = Vec::with_capacity(folds.k);
    let mut fold_prauc = Vec::with_capacity(folds.k);
    for fold in 0..folds.k {
        let (train, valid) = folds.split(fold);
        let train_y: Vec<bool> = train.iter().map(|&i| labels[i]).collect();
        let valid_y: Vec<bool> = valid.iter().map(|&i| labels[i]).collect();
        let forest = fit_gbt(&table.select_rows(&train), &train_y, config)?;
        let p = forest.predict_proba(&table.select_rows(&valid))?;
        fold_auroc.push(auroc(&p, &valid_y)?);
        fold_prauc.push(prauc(&p, &valid_y)?);
    }
    let (auroc_mean, auroc_std) = mean_std(&fold_auroc);
    let (prauc_mean, prauc_std) = mean_std(&fold_prauc);
    Ok(CvBaseline {
        fold_auroc,
        fold_prauc,
        auroc_mean,
        auroc_std,
        prauc_mean,
        prauc_std,
    })
}
