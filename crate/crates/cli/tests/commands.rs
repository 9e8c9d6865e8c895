use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn odrop(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_odrop")).args(args).output().unwrap()
}

fn stderr_json(out: &Output) -> Value {
    let text = String::from_utf8(out.stderr.clone()).unwrap();
    assert_eq!(text.trim_end().lines().count(), 1, "{text}");
    serde_json::from_str(text.trim()).unwrap()
}

const SMALL: &[&str] = &[
    "--dim", "4", "--shift-norm", "4", "--n-train", "400", "--n-test", "200", "--classifier-epochs", "3",
    "--vae-epochs", "5", "--ensemble-size", "2", "--no-search", "--n-estimators", "20",
];

fn with_out<'a>(cmd: &'a str, out: &'a str, extra: &[&'a str]) -> Vec<&'a str> {
    let mut v = vec![cmd, "--out", out];
    v.extend_from_slice(extra);
    v
}

#[test]
fn unknown_method_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let mut args = with_out("pipeline", out.to_str().unwrap(), SMALL);
    args.extend(["--methods", "mahalanobis"]);
    let o = odrop(&args);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr_json(&o);
    assert_eq!(err["kind"], "usage");
    assert!(err["message"].as_str().unwrap().contains("mahalanobis"));
    assert!(!out.exists());
}

#[test]
fn bad_flag_and_missing_subcommand_exit_two() {
    let o = odrop(&["pipeline", "--no-such-flag"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["kind"], "usage");
    let o = odrop(&[]);
    assert_eq!(o.status.code(), Some(2));
    stderr_json(&o);
}

#[test]
fn missing_data_leaves_no_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let o = odrop(&["score", "--out", out.to_str().unwrap()]);
    assert_ne!(o.status.code(), Some(0));
    stderr_json(&o);
    assert!(!out.join("scores").exists());
}

fn manifest(dir: &Path, name: &str) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join(name)).unwrap()).unwrap()
}

#[test]
fn commands_chain_through_the_artifacts_directory() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    for cmd in ["synth", "shift-test", "train-predictor", "train-ood", "score", "reject-curve", "explain"] {
        let o = odrop(&with_out(cmd, out, SMALL));
        assert!(o.status.success(), "{cmd}: {}", String::from_utf8_lossy(&o.stderr));
        let summary: Value = serde_json::from_slice(&o.stdout).unwrap();
        assert_eq!(summary["command"], cmd);
        let m = manifest(dir.path(), &format!("manifest-{cmd}.json"));
        assert!(!m["artifacts"].as_array().unwrap().is_empty(), "{cmd}");
    }
    for rel in [
        "data/train.csv",
        "data/test_ood.csv",
        "shift/tests.json",
        "predictor/forest.json",
        "ood/gem.json",
        "scores/vae_reconstruction.csv",
        "curves/auroc.svg",
        "curves/ood_precision.json",
        "report.json",
        "explain/heatmap.svg",
        "explain/shap.json",
    ] {
        assert!(dir.path().join(rel).is_file(), "{rel}");
    }
    let scores = std::fs::read_to_string(dir.path().join("scores/energy.csv")).unwrap();
    assert_eq!(scores.lines().next(), Some("row,score"));
    assert_eq!(scores.lines().count(), 201);
}
