use odrop_core::explain::{cluster_columns, cluster_rows, shap_matrix, ColumnProfile};
use odrop_core::gbt::{fit_gbt, BoostConfig, Forest};
use odrop_core::odrop::{default_rate_grid, rejection_curve, threshold_for_rate, MethodCurve, MetricKind, OdropReport};
use odrop_core::ood::{train_artifacts, OodMethod, OodTrainConfig, ScorerArtifact};
use odrop_core::synth::{generate, ShiftScenario};
use odrop_core::tabular::{load_csv_with_sidecar, write_csv};

fn small_scenario() -> ShiftScenario {
    ShiftScenario {
        n_train: 600,
        n_test: 300,
        ..ShiftScenario::with_uniform_shift(4, 4.0)
    }
}

fn quick_ood_config() -> OodTrainConfig {
    let mut cfg = OodTrainConfig::default();
    cfg.classifier.max_epochs = 5;
    cfg.vae.max_epochs = 10;
    cfg.ensemble_size = 3;
    cfg
}

#[test]
fn library_pipeline_runs_end_to_end() {
    let data = generate(&small_scenario()).unwrap();
    assert_eq!(data.test.n_rows(), 300);
    assert_eq!(data.ood_mask.iter().filter(|&&m| m).count(), 90);

    let boost = BoostConfig {
        n_estimators: 30,
        ..BoostConfig::default()
    };
    let forest = fit_gbt(&data.train, &data.train_labels, &boost).unwrap();
    let p = forest.predict_proba(&data.test).unwrap();

    let artifacts = train_artifacts(&OodMethod::ALL, &data.train, &data.train_labels, &quick_ood_config()).unwrap();
    assert_eq!(artifacts.len(), 5);

    let mut curves = Vec::new();
    for a in &artifacts {
        let scores = a.score_table(&data.test).unwrap();
        assert_eq!(scores.len(), 300);
        assert!(scores.iter().all(|s| s.is_finite()), "{}", a.method().name());
        for kind in [MetricKind::Auroc, MetricKind::Prauc] {
            let curve = rejection_curve(&scores, &p, &data.test_labels, kind, &default_rate_grid()).unwrap();
            assert_eq!(curve.points[0].rate, 0.0);
            assert_eq!(curve.points[0].metric, curve.baseline);
            curves.push(MethodCurve {
                method: a.method().name().to_string(),
                curve,
            });
        }
    }
    let report = OdropReport::new(curves);
    assert_eq!(report.summaries.len(), 10);
    let back = OdropReport::from_json(&report.to_json().unwrap()).unwrap();
    assert_eq!(back, report);

    let vae_scores = artifacts[0].score_table(&data.test).unwrap();
    let threshold = threshold_for_rate(&vae_scores, 0.3).unwrap();
    let shap = shap_matrix(&forest, &data.test, &vae_scores, threshold).unwrap();
    assert_eq!(shap.n_rows(), 300);
    let flagged = shap.ood_flags.iter().filter(|&&f| f).count();
    assert!((85..=95).contains(&flagged), "{flagged}");
    assert_eq!(cluster_rows(&shap).unwrap().leaf_order.len(), 300);
    assert_eq!(cluster_columns(&shap, ColumnProfile::Absolute).unwrap().leaf_order.len(), 4);
}

#[test]
fn models_round_trip_through_disk() {
    let data = generate(&small_scenario()).unwrap();
    let dir = tempfile::tempdir().unwrap();

    let csv = dir.path().join("train.csv");
    write_csv(&data.train, &csv).unwrap();
    let loaded = load_csv_with_sidecar(&csv).unwrap();
    assert!(loaded.schema_matches(&data.train));
    assert_eq!(loaded.values(), data.train.values());

    let forest = fit_gbt(&data.train, &data.train_labels, &BoostConfig::default()).unwrap();
    let path = dir.path().join("forest.json");
    forest.save(&path).unwrap();
    let back = Forest::load(&path).unwrap();
    assert_eq!(back.predict_margin(&data.test).unwrap(), forest.predict_margin(&data.test).unwrap());

    let artifacts = train_artifacts(&[OodMethod::Gem], &data.train, &data.train_labels, &quick_ood_config()).unwrap();
    let path = dir.path().join("gem.json");
    artifacts[0].save(&path).unwrap();
    let back = ScorerArtifact::load(&path).unwrap();
    assert_eq!(back.score_table(&data.test).unwrap(), artifacts[0].score_table(&data.test).unwrap());
}

#[test]
fn generation_is_seed_deterministic() {
    let a = generate(&small_scenario()).unwrap();
    let b = generate(&small_scenario()).unwrap();
    assert_eq!(a, b);
    let c = generate(&ShiftScenario {
        seed: 1,
        ..small_scenario()
    })
    .unwrap();
    assert_ne!(a.train.values(), c.train.values());
}
