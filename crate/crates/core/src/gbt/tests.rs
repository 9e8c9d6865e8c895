use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::*;
use crate::odrop::auroc;
use crate::tabular::{ColumnMeta, Table};

fn cfg(n_estimators: usize, max_depth: usize) -> BoostConfig {
    BoostConfig {
        n_estimators,
        max_depth,
        ..BoostConfig::default()
    }
}

fn table(rows: &[Vec<Option<f64>>]) -> Table {
    let cols = (0..rows[0].len())
        .map(|c| ColumnMeta::continuous(format!("f{c}")))
        .collect();
    Table::from_options(cols, rows.to_vec()).unwrap()
}

fn dense(rows: &[Vec<f64>]) -> Table {
    table(&rows.iter().map(|r| r.iter().map(|&v| Some(v)).collect()).collect::<Vec<_>>())
}

fn log_loss(margin: &[f64], y: &[bool]) -> f64 {
    margin
        .iter()
        .zip(y)
        .map(|(&m, &y)| {
            let p = sigmoid(m);
            -if y { p.ln() } else { (1.0 - p).ln() }
        })
        .sum::<f64>()
        / y.len() as f64
}

/// Gaussian noise features; the label depends on feature 0 only.
fn signal_in_first(n: usize, m: usize, seed: u64) -> (Table, Vec<bool>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..m).map(|_| StandardNormal.sample(&mut rng)).collect())
        .collect();
    let y = rows.iter().map(|r: &Vec<f64>| r[0] > 0.0).collect();
    (dense(&rows), y)
}

fn blobs(n: usize, seed: u64) -> (Table, Vec<bool>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    let mut y = Vec::new();
    for i in 0..n {
        let pos = i % 2 == 0;
        let c = if pos { 2.5 } else { -2.5 };
        let a: f64 = StandardNormal.sample(&mut rng);
        let b: f64 = StandardNormal.sample(&mut rng);
        rows.push(vec![c + a, c + b]);
        y.push(pos);
    }
    (dense(&rows), y)
}

#[test]
fn single_class_rejected() {
    let t = dense(&[vec![0.0], vec![1.0]]);
    assert!(matches!(
        fit_gbt(&t, &[true, true], &cfg(3, 2)),
        Err(Error::SingleClass)
    ));
}

#[test]
fn first_split_separates_the_classes() {
    let xs = [-3.0, -2.0, -1.0, -1.0, 1.0, 1.0, 2.0, 3.0];
    let t = dense(&xs.iter().map(|&x| vec![x]).collect::<Vec<_>>());
    let y: Vec<bool> = xs.iter().map(|&x| x > 0.0).collect();
    let f = fit_gbt(&t, &y, &cfg(1, 1)).unwrap();
    match &f.trees[0].nodes[0] {
        Node::Split {
            feature, threshold, ..
        } => {
            assert_eq!(*feature, 0);
            assert_eq!(*threshold, 0.0);
        }
        other => panic!("expected a split, got {other:?}"),
    }
}

#[test]
fn depth_one_leaf_is_newton_step() {
    let (t, y) = signal_in_first(300, 3, 5);
    let config = BoostConfig {
        lambda: 0.0,
        min_child_weight: 0.0,
        ..cfg(1, 1)
    };
    let f = fit_gbt(&t, &y, &config).unwrap();
    let Node::Split {
        feature,
        threshold,
        left,
        right,
        ..
    } = f.trees[0].nodes[0].clone()
    else {
        panic!("root is a leaf");
    };
    let p0 = sigmoid(f.base_score);
    let (mut g, mut h) = ([0.0; 2], [0.0; 2]);
    for r in 0..t.n_rows() {
        let side = usize::from(t.row(r)[feature] >= threshold);
        g[side] += p0 - f64::from(u8::from(y[r]));
        h[side] += p0 * (1.0 - p0);
    }
    for (side, node) in [left, right].into_iter().enumerate() {
        let Node::Leaf { weight, .. } = f.trees[0].nodes[node] else {
            panic!("child is not a leaf");
        };
        let newton = -g[side] / h[side];
        assert!((weight - newton).abs() <= 1e-10 * newton.abs().max(1.0), "{weight} vs {newton}");
    }
}

#[test]
fn training_loss_never_increases() {
    let (t, y) = signal_in_first(400, 4, 1);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let noisy: Vec<bool> = y.iter().map(|&v| v ^ rng.random_bool(0.2)).collect();
    let mut losses = Vec::new();
    fit_with_callback(&t, &noisy, &cfg(60, 3), |_, m| losses.push(log_loss(m, &noisy))).unwrap();
    for w in losses.windows(2) {
        assert!(w[1] <= w[0] + 1e-12, "{} -> {}", w[0], w[1]);
    }
}

#[test]
fn leaf_weights_vanish_once_labels_are_fit() {
    // separable at x = 0; Newton steps on separable data shrink like 1/t
    let xs: Vec<f64> = (0..20).map(|i| i as f64 - 9.5).collect();
    let t = dense(&xs.iter().map(|&x| vec![x]).collect::<Vec<_>>());
    let y: Vec<bool> = xs.iter().map(|&x| x > 0.0).collect();
    let config = BoostConfig {
        eta: 1.0,
        lambda: 1.0,
        ..cfg(2000, 1)
    };
    let mut last_margin = Vec::new();
    let f = fit_with_callback(&t, &y, &config, |r, m| {
        if r + 2 == config.n_estimators {
            last_margin = m.to_vec();
        }
    })
    .unwrap();
    let grad_sum: f64 = last_margin
        .iter()
        .zip(&y)
        .map(|(&m, &y)| (sigmoid(m) - f64::from(u8::from(y))).abs())
        .sum();
    let last = f.trees.last().unwrap();
    for node in &last.nodes {
        if let Node::Leaf { weight, .. } = node {
            assert!(weight.abs() < 1e-3, "{weight}");
            // |w| = |G| / (H + λ) <= Σ|g| / λ
            assert!(weight.abs() <= grad_sum / config.lambda + 1e-15);
        }
    }
}

#[test]
fn empty_forest_predicts_half() {
    let f = Forest {
        format_version: FOREST_FORMAT_VERSION,
        feature_names: vec!["f0".into()],
        base_score: 0.0,
        config: cfg(1, 1),
        trees: vec![],
    };
    let t = dense(&[vec![1.0], vec![-4.0]]);
    assert_eq!(f.predict_proba(&t).unwrap(), vec![0.5, 0.5]);
}

#[test]
fn clipped_leaf_keeps_probabilities_inside() {
    let mut f = Forest {
        format_version: FOREST_FORMAT_VERSION,
        feature_names: vec!["f0".into()],
        base_score: 0.0,
        config: BoostConfig { eta: 1.0, ..cfg(1, 1) },
        trees: vec![],
    };
    for w in [f64::INFINITY, f64::NEG_INFINITY] {
        f.trees = vec![Tree::leaf(fit::leaf_weight(-w, 0.0, 0.0))];
        let p = f.predict_proba(&dense(&[vec![0.0]])).unwrap()[0];
        assert!(p > 0.0 && p < 1.0, "{p}");
        // distance to the nearer bound is e^-30 / (1 + e^-30); 1 - p loses ~1 ulp
        let gap = p.min(1.0 - p);
        let expected = (-30f64).exp() / (1.0 + (-30f64).exp());
        assert!((gap - expected).abs() < 1e-2 * expected, "{gap}");
    }
}

#[test]
fn positive_tree_raises_every_probability() {
    let (t, y) = signal_in_first(200, 2, 3);
    let f = fit_gbt(&t, &y, &cfg(5, 2)).unwrap();
    let before = f.predict_proba(&t).unwrap();
    let mut g = f.clone();
    g.trees.push(Tree {
        nodes: vec![
            Node::Split {
                feature: 1,
                threshold: 0.0,
                default_left: true,
                left: 1,
                right: 2,
                gain: 0.0,
                cover: None,
            },
            Node::Leaf { weight: 0.2, cover: None },
            Node::Leaf { weight: 0.7, cover: None },
        ],
    });
    let after = g.predict_proba(&t).unwrap();
    assert!(before.iter().zip(&after).all(|(a, b)| b > a));
}

#[test]
fn deterministic_serialization() {
    let (t, y) = signal_in_first(300, 5, 9);
    let a = fit_gbt(&t, &y, &cfg(20, 3)).unwrap().to_json().unwrap();
    let b = fit_gbt(&t, &y, &cfg(20, 3)).unwrap().to_json().unwrap();
    assert_eq!(a, b);
}

#[test]
fn json_round_trip_is_bit_exact() {
    let (t, y) = signal_in_first(300, 5, 4);
    let f = fit_gbt(&t, &y, &cfg(30, 4)).unwrap();
    let back = Forest::from_json(&f.to_json().unwrap()).unwrap();
    let a = f.predict_proba(&t).unwrap();
    let b = back.predict_proba(&t).unwrap();
    assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));

    let mut v: serde_json::Value = serde_json::from_str(&f.to_json().unwrap()).unwrap();
    v["format_version"] = 99.into();
    assert!(matches!(
        Forest::from_json(&v.to_string()),
        Err(Error::FormatVersion { found: 99, .. })
    ));
}

#[test]
fn predict_checks_width() {
    let (t, y) = signal_in_first(100, 3, 4);
    let f = fit_gbt(&t, &y, &cfg(2, 2)).unwrap();
    let narrow = t.select_columns(&[0, 1]).unwrap();
    assert!(matches!(
        f.predict_proba(&narrow),
        Err(Error::DimensionMismatch { expected: 3, got: 2 })
    ));
}

/// Label equals "x0 missing or x0 > 1": the learner has to send missing left
/// or right depending on which side holds the positives.
fn missing_data(seed: u64) -> (Table, Vec<bool>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    let mut y = Vec::new();
    for _ in 0..600 {
        let x0: f64 = StandardNormal.sample(&mut rng);
        let x1: f64 = StandardNormal.sample(&mut rng);
        let miss = rng.random_bool(0.25);
        rows.push(vec![if miss { None } else { Some(x0) }, Some(x1)]);
        y.push(miss || x0 > 1.0);
    }
    (table(&rows), y)
}

#[test]
fn missing_values_follow_learned_default() {
    let (t, y) = missing_data(1);
    let f = fit_gbt(&t, &y, &cfg(20, 3)).unwrap();
    let p = f.predict_proba(&t).unwrap();
    assert!(auroc(&p, &y).unwrap() > 0.99);
    let root_default = match &f.trees[0].nodes[0] {
        Node::Split { feature: 0, default_left, .. } => *default_left,
        other => panic!("unexpected root {other:?}"),
    };
    // positives sit at high x0, i.e. on the right
    assert!(!root_default);
}

#[test]
fn missing_equals_default_side_extreme() {
    let (t, y) = missing_data(2);
    let f = fit_gbt(&t, &y, &cfg(30, 4)).unwrap();
    let mut checked = 0;
    for tree in &f.trees {
        for feature in 0..2 {
            let defaults: Vec<bool> = tree
                .nodes
                .iter()
                .filter_map(|n| match n {
                    Node::Split { feature: g, default_left, .. } if *g == feature => {
                        Some(*default_left)
                    }
                    _ => None,
                })
                .collect();
            let Some(&first) = defaults.first() else { continue };
            if defaults.iter().any(|&d| d != first) {
                continue;
            }
            let surrogate = if first { f64::NEG_INFINITY } else { f64::INFINITY };
            for r in 0..t.n_rows() {
                let mut a = t.row(r).to_vec();
                let mut b = a.clone();
                a[feature] = f64::NAN;
                b[feature] = surrogate;
                assert_eq!(tree.predict(&a), tree.predict(&b));
            }
            checked += 1;
        }
    }
    assert!(checked > 10, "{checked}");
}

#[test]
fn grid_with_one_candidate() {
    let (t, y) = blobs(200, 1);
    let grid = GridSpec {
        n_estimators: vec![10],
        max_depth: vec![2],
        min_child_weight: vec![2.0],
    };
    let r = grid_search(&t, &y, &grid, &BoostConfig::default(), 3, 0).unwrap();
    assert_eq!(r.points.len(), 1);
    assert_eq!((r.best.n_estimators, r.best.max_depth, r.best.min_child_weight), (10, 2, 2.0));
}

#[test]
fn grid_ties_prefer_simpler_models() {
    // one clean split fits every fold, so every config scores the same
    let xs: Vec<f64> = (0..60).map(|i| if i % 2 == 0 { i as f64 } else { -(i as f64) - 1.0 }).collect();
    let t = dense(&xs.iter().map(|&x| vec![x]).collect::<Vec<_>>());
    let y: Vec<bool> = xs.iter().map(|&x| x >= 0.0).collect();
    let grid = GridSpec {
        n_estimators: vec![20, 5, 10],
        max_depth: vec![3, 1],
        min_child_weight: vec![0.5, 1.0],
    };
    let r = grid_search(&t, &y, &grid, &BoostConfig::default(), 3, 0).unwrap();
    assert!(r.points.iter().all(|p| p.mean_auroc == r.points[0].mean_auroc));
    assert_eq!((r.best.n_estimators, r.best.max_depth, r.best.min_child_weight), (5, 1, 1.0));
}

#[test]
fn grid_prefix_scores_match_direct_fits() {
    let (t, y) = signal_in_first(300, 3, 8);
    let grid = GridSpec {
        n_estimators: vec![3, 7],
        max_depth: vec![2],
        min_child_weight: vec![1.0],
    };
    let r = grid_search(&t, &y, &grid, &BoostConfig::default(), 3, 5).unwrap();
    let folds = crate::tabular::stratified_folds(&y, 3, 5).unwrap();
    for p in &r.points {
        for fold in 0..3 {
            let (train, valid) = folds.split(fold);
            let ty: Vec<bool> = train.iter().map(|&i| y[i]).collect();
            let vy: Vec<bool> = valid.iter().map(|&i| y[i]).collect();
            let f = fit_gbt(&t.select_rows(&train), &ty, &p.config).unwrap();
            let s = f.predict_proba(&t.select_rows(&valid)).unwrap();
            assert_eq!(auroc(&s, &vy).unwrap(), p.fold_auroc[fold]);
        }
    }
}

#[test]
fn rfe_keeps_the_signal_feature() {
    for seed in 0..20 {
        let (t, y) = signal_in_first(300, 6, 100 + seed);
        let kept = rfe(&t, &y, 1, None, &cfg(20, 2)).unwrap();
        assert_eq!(kept, vec![0], "seed {seed}");
    }
}

#[test]
fn rfe_edge_cases() {
    let (t, y) = signal_in_first(200, 5, 1);
    assert_eq!(rfe(&t, &y, 5, None, &cfg(5, 2)).unwrap(), vec![0, 1, 2, 3, 4]);
    assert_eq!(rfe(&t, &y, 3, Some(10), &cfg(5, 2)).unwrap().len(), 3);
    assert!(rfe(&t, &y, 0, None, &cfg(5, 2)).is_err());
    assert!(rfe(&t, &y, 6, None, &cfg(5, 2)).is_err());
}
