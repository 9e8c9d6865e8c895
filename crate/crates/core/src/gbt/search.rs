use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{fit_gbt, fit_with_callback, sigmoid, BoostConfig, MAX_MARGIN};
use crate::error::{Error, Result};
use crate::odrop::auroc;
use crate::tabular::{stratified_folds, Table};

/// Candidate hyperparameter lists.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n_estimators: Vec<usize>,
    pub max_depth: Vec<usize>,
    pub min_child_weight: Vec<f64>,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            n_estimators: vec![50, 100, 200],
            max_depth: vec![2, 4, 6],
            min_child_weight: vec![1.0, 2.0, 3.0],
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_estimators.is_empty() || self.max_depth.is_empty() || self.min_child_weight.is_empty()
        {
            return Err(Error::InvalidArgument("grid lists must be non-empty".into()));
        }
        Ok(())
    }

    /// Every grid point in nested (n_estimators, max_depth, min_child_weight) order.
    pub fn configs(&self, base: &BoostConfig) -> Vec<BoostConfig> {
        let mut out = Vec::new();
        for &n_estimators in &self.n_estimators {
            for &max_depth in &self.max_depth {
                for &min_child_weight in &self.min_child_weight {
                    out.push(BoostConfig {
                        n_estimators,
                        max_depth,
                        min_child_weight,
                        ..base.clone()
                    });
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub config: BoostConfig,
    pub fold_auroc: Vec<f64>,
    pub mean_auroc: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub best: BoostConfig,
    /// In [`GridSpec::configs`] order.
    pub points: Vec<GridPoint>,
}

/// `a` is preferred over `b` at equal AUROC: fewer trees, then shallower,
/// then larger min_child_weight.
fn simpler(a: &BoostConfig, b: &BoostConfig) -> bool {
    (a.n_estimators, a.max_depth)
        .cmp(&(b.n_estimators, b.max_depth))
        .then(b.min_child_weight.total_cmp(&a.min_child_weight))
        .is_lt()
}

/// k-fold CV over every grid point, selecting the best mean validation AUROC.
/// Each (depth, min_child_weight, fold) fits the largest tree count once and
/// scores every smaller count on the same boosting prefix.
pub fn grid_search(
    features: &Table,
    labels: &[bool],
    grid: &GridSpec,
    base: &BoostConfig,
    k: usize,
    seed: u64,
) -> Result<GridResult> {
    grid.validate()?;
    let folds = stratified_folds(labels, k, seed)?;
    let max_trees = *grid.n_estimators.iter().max().expect("non-empty");
    let mut jobs = Vec::new();
    for &max_depth in &grid.max_depth {
        for &min_child_weight in &grid.min_child_weight {
            for fold in 0..k {
                jobs.push((max_depth, min_child_weight, fold));
            }
        }
    }

    // per job: validation AUROC after each requested tree count
    let scores: Vec<Vec<f64>> = jobs
        .par_iter()
        .map(|&(max_depth, min_child_weight, fold)| {
            let (train, valid) = folds.split(fold);
            let config = BoostConfig {
                n_estimators: max_trees,
                max_depth,
                min_child_weight,
                ..base.clone()
            };
            let train_x = features.select_rows(&train);
            let train_y: Vec<bool> = train.iter().map(|&i| labels[i]).collect();
            let valid_x = features.select_rows(&valid);
            let valid_y: Vec<bool> = valid.iter().map(|&i| labels[i]).collect();
            let forest = fit_with_callback(&train_x, &train_y, &config, |_, _| {})?;

            let mut margin = vec![forest.base_score; valid.len()];
            let mut out = Vec::with_capacity(grid.n_estimators.len());
            for (t, tree) in forest.trees.iter().enumerate() {
                for (r, m) in margin.iter_mut().enumerate() {
                    *m += forest.config.eta * tree.predict(valid_x.row(r));
                }
                if grid.n_estimators.contains(&(t + 1)) {
                    let p: Vec<f64> = margin
                        .iter()
                        .map(|&m| sigmoid(m.clamp(-MAX_MARGIN, MAX_MARGIN)))
                        .collect();
                    out.push((t + 1, auroc(&p, &valid_y)?));
                }
            }
            Ok(grid
                .n_estimators
                .iter()
                .map(|n| out.iter().find(|(t, _)| t == n).expect("scored").1)
                .collect())
        })
        .collect::<Result<_>>()?;

    let mut points = Vec::new();
    for (ni, &n_estimators) in grid.n_estimators.iter().enumerate() {
        for &max_depth in &grid.max_depth {
            for &min_child_weight in &grid.min_child_weight {
                let fold_auroc: Vec<f64> = jobs
                    .iter()
                    .zip(&scores)
                    .filter(|((d, w, _), _)| *d == max_depth && *w == min_child_weight)
                    .map(|(_, s)| s[ni])
                    .collect();
                let mean_auroc = fold_auroc.iter().sum::<f64>() / k as f64;
                points.push(GridPoint {
                    config: BoostConfig {
                        n_estimators,
                        max_depth,
                        min_child_weight,
                        ..base.clone()
                    },
                    fold_auroc,
                    mean_auroc,
                });
            }
        }
    }

    let mut best = &points[0];
    for p in &points[1..] {
        if p.mean_auroc > best.mean_auroc
            || (p.mean_auroc == best.mean_auroc && simpler(&p.config, &best.config))
        {
            best = p;
        }
    }
    Ok(GridResult {
        best: best.config.clone(),
        points,
    })
}

/// Recursive feature elimination by total split gain. Each round drops
/// `step` features (default: 10% of those remaining, at least 1), never going
/// below `target_k`. Ties drop the higher column index first. Returns the
/// surviving column indices in ascending order.
pub fn rfe(
    features: &Table,
    labels: &[bool],
    target_k: usize,
    step: Option<usize>,
    config: &BoostConfig,
) -> Result<Vec<usize>> {
    let m = features.n_cols();
    if target_k == 0 {
        return Err(Error::InvalidArgument("target_k must be >= 1".into()));
    }
    if target_k > m {
        return Err(Error::InvalidArgument(format!(
            "target_k {target_k} exceeds the {m} available features"
        )));
    }
    if step == Some(0) {
        return Err(Error::InvalidArgument("step must be >= 1".into()));
    }
    let mut remaining: Vec<usize> = (0..m).collect();
    while remaining.len() > target_k {
        let forest = fit_gbt(&features.select_columns(&remaining)?, labels, config)?;
        let gain = forest.gain_importance();
        let per_round = step.unwrap_or((remaining.len() / 10).max(1));
        let drop = per_round.min(remaining.len() - target_k);
        let mut order: Vec<usize> = (0..remaining.len()).collect();
        order.sort_by(|&a, &b| gain[a].total_cmp(&gain[b]).then(b.cmp(&a)));
        let mut dropped: Vec<usize> = order[..drop].to_vec();
        dropped.sort_unstable();
        for pos in dropped.into_iter().rev() {
            remaining.remove(pos);
        }
    }
    Ok(remaining)
}
