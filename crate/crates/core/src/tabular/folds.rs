use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fold index per row, each in `[0, k)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldAssignment {
    pub k: usize,
    pub folds: Vec<usize>,
}

impl FoldAssignment {
    /// `(train_rows, validation_rows)` for one fold.
    pub fn split(&self, fold: usize) -> (Vec<usize>, Vec<usize>) {
        let mut train = Vec::new();
        let mut valid = Vec::new();
        for (i, &f) in self.folds.iter().enumerate() {
            if f == fold {
                valid.push(i);
            } else {
                train.push(i);
            }
        }
        (train, valid)
    }
}

/// Shuffles each class with a seeded generator and deals its rows round-robin
/// over the folds. The dealing position carries over from one class to the
/// next so fold sizes stay within one of each other.
pub fn stratified_folds(labels: &[bool], k: usize, seed: u64) -> Result<FoldAssignment> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("k must be >= 2, got {k}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![0; labels.len()];
    let mut offset = 0;
    for class in [false, true] {
        let mut rows: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if rows.len() < k {
            return Err(Error::TooFewInClass {
                class: class as u8,
                count: rows.len(),
                k,
            });
        }
        rows.shuffle(&mut rng);
        for (pos, &row) in rows.iter().enumerate() {
            folds[row] = (offset + pos) % k;
        }
        offset = (offset + rows.len()) % k;
    }
    Ok(FoldAssignment { k, folds })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ten_rows_five_positive() {
        let labels: Vec<bool> = (0..10).map(|i| i % 2 == 0).collect();
        let f = stratified_folds(&labels, 5, 3).unwrap();
        for fold in 0..5 {
            let pos = (0..10).filter(|&i| f.folds[i] == fold && labels[i]).count();
            assert_eq!(pos, 1);
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let labels: Vec<bool> = (0..50).map(|i| i % 3 == 0).collect();
        assert_eq!(
            stratified_folds(&labels, 5, 9).unwrap(),
            stratified_folds(&labels, 5, 9).unwrap()
        );
    }

    #[test]
    fn too_few_positives() {
        let mut labels = vec![false; 20];
        labels[..3].fill(true);
        assert!(matches!(
            stratified_folds(&labels, 5, 0),
            Err(Error::TooFewInClass { class: 1, count: 3, k: 5 })
        ));
    }

    proptest! {
        #[test]
        fn folds_partition_and_stratify(n_pos in 250usize..1000, n_neg in 250usize..1000, seed: u64) {
            let labels: Vec<bool> = (0..n_pos + n_neg).map(|i| i < n_pos).collect();
            let f = stratified_folds(&labels, 5, seed).unwrap();
            prop_assert!(f.folds.iter().all(|&x| x < 5));
            let global = n_pos as f64 / (n_pos + n_neg) as f64;
            let mut total = 0;
            for fold in 0..5 {
                let (_, valid) = f.split(fold);
                total += valid.len();
                let pos = valid.iter().filter(|&&i| labels[i]).count();
                let frac = pos as f64 / valid.len() as f64;
                prop_assert!((frac - global).abs() <= 0.02, "fold {} frac {} vs {}", fold, frac, global);
            }
            prop_assert_eq!(total, n_pos + n_neg);
        }
    }
}
