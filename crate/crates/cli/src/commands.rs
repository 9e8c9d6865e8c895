use std::collections::HashMap;
use std::fs::File;
use std::path::{Path, PathBuf};

use odrop_core::explain::{cluster_columns, cluster_rows, heatmap_export, shap_matrix, Dendrogram, ShapMatrix};
use odrop_core::gbt::{fit_gbt, grid_search, rfe, Forest};
use odrop_core::odrop::{
    curve_csv, cv_baseline, partition, rejection_curve, threshold_for_rate, MethodCurve, MetricKind,
    OdropReport,
};
use odrop_core::ood::{train_artifacts, OodMethod, ScorerArtifact};
use odrop_core::stats::{kde, shift_tests, ColumnShift, TestKind};
use odrop_core::svg::{line_plot, Series};
use odrop_core::synth::{generate, ShiftScenario};
use odrop_core::tabular::{
    load_csv_with_sidecar, onset_labels, read_csv, sidecar_path, write_csv, ColumnKind, ColumnMeta,
    DiagnosticCriteria, Disease, OnsetLabel, Table, TableMeta,
};
use serde::Serialize;

use crate::args::{Cli, Command};
use crate::config::RunConfig;
use crate::output::{Manifest, Outputs};
use crate::CliError;

const KDE_GRID: usize = 200;

pub fn dispatch(cli: Cli) -> Result<Manifest, CliError> {
    let args = cli.command.args();
    let cfg = args.resolve()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.threads.unwrap_or(0))
        .build()
        .map_err(|e| CliError::runtime(format!("thread pool: {e}")))?;
    pool.install(|| run(&cli.command, cfg, &args.out))
}

fn run(command: &Command, cfg: RunConfig, out_dir: &Path) -> Result<Manifest, CliError> {
    let inputs = cfg.artifacts_dir.clone().unwrap_or_else(|| out_dir.to_path_buf());
    let mut ctx = Ctx {
        out: Outputs::new(out_dir)?,
        inputs,
        cfg,
    };
    match command {
        Command::Synth(_) => {
            let s = ctx.cfg.scenario.clone().ok_or_else(|| {
                CliError::usage("synth needs --scenario, --dim/--shift-norm or a config scenario")
            })?;
            let data = synthesize(&s, &ctx.cfg.label_column)?;
            write_data(&mut ctx, &data, Some(&s))?;
        }
        Command::Label(_) => label(&mut ctx)?,
        Command::ShiftTest(_) => {
            let data = ctx.data()?;
            shift_test(&mut ctx, &data)?;
        }
        Command::TrainPredictor(_) => {
            let data = ctx.data()?;
            train_predictor(&mut ctx, &data)?;
        }
        Command::TrainOod(_) => {
            let data = ctx.data()?;
            train_ood(&mut ctx, &data)?;
        }
        Command::Score(_) => {
            let data = ctx.data()?;
            let mut scorers = Vec::new();
            for m in ctx.cfg.parsed_methods()? {
                let path = ctx.input(&scorer_path(m))?;
                scorers.push(ScorerArtifact::load(&path)?);
            }
            score(&mut ctx, &data, &scorers)?;
        }
        Command::RejectCurve(_) => {
            let data = ctx.data()?;
            let forest = ctx.forest()?;
            let scores = ctx
                .cfg
                .parsed_methods()?
                .into_iter()
                .map(|m| Ok((m, ctx.scores(m)?)))
                .collect::<Result<Vec<_>, CliError>>()?;
            reject_curve(&mut ctx, &data, &forest, &scores)?;
        }
        Command::Explain(_) => {
            let data = ctx.data()?;
            let forest = ctx.forest()?;
            let method = ctx.cfg.explain_method()?;
            let scores = ctx.scores(method)?;
            let path = ctx.input("report.json")?;
            let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
            let report = OdropReport::from_json(&text)?;
            explain(&mut ctx, &data, &forest, &scores, &report)?;
        }
        Command::Pipeline(_) => pipeline(&mut ctx)?,
    }
    let manifest_name = match command {
        Command::Pipeline(_) => "manifest.json".to_string(),
        other => format!("manifest-{}.json", other.name()),
    };
    let mut seeds = vec![("seed".to_string(), ctx.cfg.seed)];
    if let Some(s) = &ctx.cfg.scenario {
        seeds.push(("scenario_seed".to_string(), s.seed));
    }
    let hash = ctx.cfg.hash();
    let Ctx { out, .. } = ctx;
    out.commit(&manifest_name, command.name(), hash, seeds)
}

fn pipeline(ctx: &mut Ctx) -> Result<(), CliError> {
    let data = ctx.data()?;
    if data.synthetic {
        let s = ctx.cfg.scenario.clone();
        write_data(ctx, &data, s.as_ref())?;
    }
    shift_test(ctx, &data)?;
    let forest = train_predictor(ctx, &data)?;
    let scorers = train_ood(ctx, &data)?;
    let scores = score(ctx, &data, &scorers)?;
    let report = reject_curve(ctx, &data, &forest, &scores)?;
    let method = ctx.cfg.explain_method()?;
    let explained = scores
        .iter()
        .find(|(m, _)| *m == method)
        .map(|(_, s)| s.clone())
        .ok_or_else(|| CliError::usage(format!("explain method '{method}' is not among the scored methods")))?;
    explain(ctx, &data, &forest, &explained, &report)
}

struct Ctx {
    cfg: RunConfig,
    out: Outputs,
    /// Where inputs produced by earlier commands are read from.
    inputs: PathBuf,
}

/// Train and test tables, both still holding the label column.
struct Data {
    train: Table,
    test: Table,
    /// Ground-truth shifted rows, known for synthetic data.
    ood_mask: Option<Vec<bool>>,
    synthetic: bool,
}

impl Ctx {
    fn input(&self, rel: &str) -> Result<PathBuf, CliError> {
        let p = self.inputs.join(rel);
        if p.exists() {
            Ok(p)
        } else {
            Err(CliError::usage(format!(
                "missing input {}; run the command that produces it or point --artifacts at its output",
                p.display()
            )))
        }
    }

    /// Explicit CSVs, else the configured scenario, else `data/` from an
    /// earlier `synth`.
    fn data(&self) -> Result<Data, CliError> {
        match (&self.cfg.train_csv, &self.cfg.test_csv) {
            (Some(train), Some(test)) => {
                let train = load_csv_with_sidecar(train)?;
                let test = load_like(test, &train)?;
                return Ok(Data {
                    train,
                    test,
                    ood_mask: None,
                    synthetic: false,
                });
            }
            (None, None) => {}
            _ => return Err(CliError::usage("--train and --test go together")),
        }
        if let Some(s) = &self.cfg.scenario {
            return synthesize(s, &self.cfg.label_column);
        }
        let train_path = self.inputs.join("data/train.csv");
        if train_path.exists() {
            let train = load_csv_with_sidecar(&train_path)?;
            let test = load_like(&self.input("data/test.csv")?, &train)?;
            let mask_path = self.inputs.join("data/test_ood.csv");
            let ood_mask = if mask_path.exists() {
                Some(read_column(&mask_path, 1)?.into_iter().map(|v| v != 0.0).collect())
            } else {
                None
            };
            return Ok(Data {
                train,
                test,
                ood_mask,
                synthetic: true,
            });
        }
        Err(CliError::usage(
            "no input data: give --train/--test, a scenario, or run synth first",
        ))
    }

    fn forest(&self) -> Result<Forest, CliError> {
        Ok(Forest::load(&self.input("predictor/forest.json")?)?)
    }

    fn scores(&self, m: OodMethod) -> Result<Vec<f64>, CliError> {
        read_column(&self.input(&scores_path(m))?, 1)
    }

    fn features(&self, table: &Table) -> Table {
        let mut drop: Vec<&str> = vec![self.cfg.label_column.as_str()];
        drop.extend(self.cfg.exclude_columns.iter().map(String::as_str));
        table.drop_columns(&drop)
    }

    fn labels(&self, table: &Table) -> Result<Vec<bool>, CliError> {
        Ok(table.binary_column(&self.cfg.label_column)?)
    }

    fn write_table(&mut self, rel: &str, table: &Table) -> Result<(), CliError> {
        let path = self.out.path(rel)?;
        self.out.track(rel, "table");
        let side = sidecar_path(Path::new(rel));
        self.out.track(&side.to_string_lossy(), "table_meta");
        write_csv(table, &path)?;
        Ok(())
    }
}

/// Loads `path` with `reference`'s column kinds and category codes unless
/// it has a sidecar of its own.
fn load_like(path: &Path, reference: &Table) -> Result<Table, CliError> {
    if sidecar_path(path).exists() {
        return Ok(load_csv_with_sidecar(path)?);
    }
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    Ok(read_csv(file, &HashMap::new(), Some(&TableMeta::of(reference)))?)
}

/// Numeric column `col` of a headed CSV.
fn read_column(path: &Path, col: usize) -> Result<Vec<f64>, CliError> {
    let bad = |m: String| CliError::runtime(format!("{}: {m}", path.display()));
    let mut rdr = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
    rdr.records()
        .map(|r| {
            let r = r.map_err(|e| bad(e.to_string()))?;
            r.get(col)
                .and_then(|s| s.parse::<f64>().ok())
                .ok_or_else(|| bad(format!("bad value in column {col}")))
        })
        .collect()
}

fn scorer_path(m: OodMethod) -> String {
    format!("ood/{m}.json")
}

fn scores_path(m: OodMethod) -> String {
    format!("scores/{m}.csv")
}

fn label_meta(name: &str) -> ColumnMeta {
    ColumnMeta {
        name: name.to_string(),
        kind: ColumnKind::Boolean,
        categories: Vec::new(),
    }
}

fn with_labels(table: &Table, name: &str, labels: &[bool]) -> Result<Table, CliError> {
    let cells: Vec<Option<f64>> = labels.iter().map(|&y| Some(y as u8 as f64)).collect();
    Ok(table.with_column(label_meta(name), &cells)?)
}

fn synthesize(s: &ShiftScenario, label_column: &str) -> Result<Data, CliError> {
    let d = generate(s)?;
    Ok(Data {
        train: with_labels(&d.train, label_column, &d.train_labels)?,
        test: with_labels(&d.test, label_column, &d.test_labels)?,
        ood_mask: Some(d.ood_mask),
        synthetic: true,
    })
}

fn write_data(ctx: &mut Ctx, data: &Data, scenario: Option<&ShiftScenario>) -> Result<(), CliError> {
    ctx.write_table("data/train.csv", &data.train)?;
    ctx.write_table("data/test.csv", &data.test)?;
    if let Some(mask) = &data.ood_mask {
        let mut text = String::from("row,ood\n");
        for (i, &m) in mask.iter().enumerate() {
            text.push_str(&format!("{i},{}\n", m as u8));
        }
        ctx.out.write("data/test_ood.csv", "ground_truth", text)?;
    }
    if let Some(s) = scenario {
        ctx.out.write_json("data/scenario.json", "scenario", s)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct LabelSummary {
    disease: Disease,
    lowered_hypertension: bool,
    n_rows: usize,
    n_onset: usize,
    n_no_onset: usize,
    n_prevalent: usize,
    n_unlabelable: usize,
    n_no_follow_up: usize,
}

fn label(ctx: &mut Ctx) -> Result<(), CliError> {
    let l = ctx.cfg.label.clone();
    let (Some(t), Some(t1)) = (&l.year_t_csv, &l.year_t1_csv) else {
        return Err(CliError::usage("label needs --year-t and --year-t1"));
    };
    let year_t = load_csv_with_sidecar(t)?;
    let year_t1 = load_csv_with_sidecar(t1)?;
    let mut criteria = DiagnosticCriteria::default();
    if l.lowered_hypertension {
        criteria = criteria.with_lowered_hypertension_threshold();
    }
    let labeling = onset_labels(&year_t, &year_t1, &criteria, l.disease, &l.subject_column)?;

    let mut text = String::from("row,label\n");
    for (i, lab) in labeling.labels.iter().enumerate() {
        let name = match lab {
            OnsetLabel::Onset => "onset".to_string(),
            OnsetLabel::NoOnset => "no_onset".to_string(),
            OnsetLabel::Excluded(r) => {
                let r = serde_json::to_value(r).map_err(|e| CliError::runtime(e.to_string()))?;
                format!("excluded_{}", r.as_str().unwrap_or("other"))
            }
        };
        text.push_str(&format!("{i},{name}\n"));
    }
    ctx.out.write("label/labels.csv", "labels", text)?;

    let (rows, ys): (Vec<usize>, Vec<bool>) = labeling
        .labels
        .iter()
        .enumerate()
        .filter_map(|(i, l)| l.as_binary().map(|y| (i, y)))
        .unzip();
    let labeled = with_labels(&year_t.select_rows(&rows), &ctx.cfg.label_column, &ys)?;
    ctx.write_table("label/labeled.csv", &labeled)?;
    let summary = LabelSummary {
        disease: l.disease,
        lowered_hypertension: l.lowered_hypertension,
        n_rows: year_t.n_rows(),
        n_onset: labeling.n_onset,
        n_no_onset: labeling.n_no_onset,
        n_prevalent: labeling.n_prevalent,
        n_unlabelable: labeling.n_unlabelable,
        n_no_follow_up: labeling.n_no_follow_up,
    };
    ctx.out.write_json("label/summary.json", "label_summary", &summary)?;
    Ok(())
}

fn test_name(k: TestKind) -> &'static str {
    match k {
        TestKind::WelchT => "welch_t",
        TestKind::ChiSquare => "chi_square",
        TestKind::FisherExact => "fisher_exact",
    }
}

/// File-name-safe form of a column name.
fn slug(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

fn shift_test(ctx: &mut Ctx, data: &Data) -> Result<Vec<ColumnShift>, CliError> {
    let a = ctx.features(&data.train);
    let b = ctx.features(&data.test);
    let tests = shift_tests(&a, &b)?;
    ctx.out.write_json("shift/tests.json", "shift_tests", &tests)?;
    let mut text = String::from("column,test,statistic,dof,p_value,n_train,n_test\n");
    for t in &tests {
        let (kind, stat, dof, p) = match &t.result {
            Some(r) => (
                test_name(r.test_kind),
                r.statistic.to_string(),
                r.dof.map(|d| d.to_string()).unwrap_or_default(),
                r.p_value.to_string(),
            ),
            None => ("none", String::new(), String::new(), String::new()),
        };
        text.push_str(&format!(
            "\"{}\",{kind},{stat},{dof},{p},{},{}\n",
            t.column.replace('"', "\"\""),
            t.n_a,
            t.n_b
        ));
    }
    ctx.out.write("shift/tests.csv", "shift_tests", text)?;

    for (c, meta) in a.columns().iter().enumerate() {
        if meta.kind != ColumnKind::Continuous {
            continue;
        }
        let mut csv_text = String::from("sample,x,density\n");
        let mut series = Vec::new();
        for (sample, table) in [("train", &a), ("test", &b)] {
            let Ok(curve) = kde(&table.observed(c), KDE_GRID) else {
                continue;
            };
            for (x, y) in curve.grid.iter().zip(&curve.density) {
                csv_text.push_str(&format!("{sample},{x},{y}\n"));
            }
            series.push(Series {
                name: sample.to_string(),
                points: curve.grid.iter().copied().zip(curve.density.iter().copied()).collect(),
            });
        }
        if series.is_empty() {
            continue;
        }
        let stem = format!("shift/kde/{c:03}_{}", slug(&meta.name));
        ctx.out.write(&format!("{stem}.csv"), "kde", csv_text)?;
        let svg = line_plot(&meta.name, &meta.name, "density", &series, None);
        ctx.out.write(&format!("{stem}.svg"), "plot", svg)?;
    }
    Ok(tests)
}

#[derive(Serialize)]
struct RfeReport<'a> {
    target_features: usize,
    selected: Vec<&'a str>,
}

fn train_predictor(ctx: &mut Ctx, data: &Data) -> Result<Forest, CliError> {
    let mut x = ctx.features(&data.train);
    let y = ctx.labels(&data.train)?;
    let p = ctx.cfg.predictor.clone();
    if let Some(k) = p.rfe_features {
        let keep = rfe(&x, &y, k, None, &p.boost)?;
        x = x.select_columns(&keep)?;
        let names = x.column_names();
        let report = RfeReport {
            target_features: k,
            selected: names,
        };
        ctx.out.write_json("predictor/rfe.json", "rfe", &report)?;
    }
    let best = if p.search {
        let grid = grid_search(&x, &y, &p.grid, &p.boost, p.folds, ctx.cfg.seed)?;
        ctx.out.write_json("predictor/grid.json", "grid_search", &grid)?;
        grid.best
    } else {
        p.boost.clone()
    };
    let cv = cv_baseline(&x, &y, &best, p.folds, ctx.cfg.seed)?;
    ctx.out.write_json("predictor/cv_baseline.json", "cv_baseline", &cv)?;
    let forest = fit_gbt(&x, &y, &best)?;
    ctx.out.write("predictor/forest.json", "predictor", forest.to_json()?)?;
    Ok(forest)
}

fn train_ood(ctx: &mut Ctx, data: &Data) -> Result<Vec<ScorerArtifact>, CliError> {
    let x = ctx.features(&data.train);
    let y = ctx.labels(&data.train)?;
    let methods = ctx.cfg.parsed_methods()?;
    let config = ctx.cfg.ood.train_config(ctx.cfg.seed);
    let scorers = train_artifacts(&methods, &x, &y, &config)?;
    for s in &scorers {
        ctx.out.write(&scorer_path(s.method()), "scorer", s.to_json()?)?;
    }
    Ok(scorers)
}

fn score(
    ctx: &mut Ctx,
    data: &Data,
    scorers: &[ScorerArtifact],
) -> Result<Vec<(OodMethod, Vec<f64>)>, CliError> {
    let x = ctx.features(&data.test);
    let mut out = Vec::with_capacity(scorers.len());
    for s in scorers {
        let scores = s.score_table(&x)?;
        let mut text = String::from("row,score\n");
        for (i, v) in scores.iter().enumerate() {
            text.push_str(&format!("{i},{v}\n"));
        }
        ctx.out.write(&scores_path(s.method()), "scores", text)?;
        out.push((s.method(), scores));
    }
    Ok(out)
}

/// Share of rejected rows that are truly shifted, per grid rate.
#[derive(Serialize)]
struct OodPrecision {
    method: OodMethod,
    rates: Vec<f64>,
    n_rejected: Vec<usize>,
    precision: Vec<Option<f64>>,
}

fn ood_precision(m: OodMethod, scores: &[f64], mask: &[bool], grid: &[f64]) -> Result<OodPrecision, CliError> {
    let mut n_rejected = Vec::with_capacity(grid.len());
    let mut precision = Vec::with_capacity(grid.len());
    for &rate in grid {
        let (keep, _) = partition(scores, threshold_for_rate(scores, rate)?);
        let rejected: Vec<usize> = (0..keep.len()).filter(|&i| !keep[i]).collect();
        let hits = rejected.iter().filter(|&&i| mask[i]).count();
        n_rejected.push(rejected.len());
        precision.push((!rejected.is_empty()).then(|| hits as f64 / rejected.len() as f64));
    }
    Ok(OodPrecision {
        method: m,
        rates: grid.to_vec(),
        n_rejected,
        precision,
    })
}

fn predictor_input(ctx: &Ctx, table: &Table, forest: &Forest) -> Result<Table, CliError> {
    let names: Vec<&str> = forest.feature_names.iter().map(String::as_str).collect();
    Ok(ctx.features(table).select_columns_by_name(&names)?)
}

fn reject_curve(
    ctx: &mut Ctx,
    data: &Data,
    forest: &Forest,
    scores: &[(OodMethod, Vec<f64>)],
) -> Result<OdropReport, CliError> {
    let x = predictor_input(ctx, &data.test, forest)?;
    let y = ctx.labels(&data.test)?;
    let p = forest.predict_proba(&x)?;
    let grid = ctx.cfg.rate_grid.clone();
    let mut curves = Vec::new();
    for (m, s) in scores {
        if s.len() != y.len() {
            return Err(CliError::runtime(format!(
                "{m} has {} scores for {} test rows",
                s.len(),
                y.len()
            )));
        }
        for metric in MetricKind::ALL {
            let curve = rejection_curve(s, &p, &y, metric, &grid)?;
            ctx.out
                .write(&format!("curves/{m}_{}.csv", metric.name()), "curve", curve_csv(&curve))?;
            curves.push(MethodCurve {
                method: m.name().to_string(),
                curve,
            });
        }
    }
    for metric in MetricKind::ALL {
        let of_metric: Vec<&MethodCurve> = curves.iter().filter(|c| c.curve.metric_kind == metric).collect();
        let series: Vec<Series> = of_metric
            .iter()
            .map(|c| Series {
                name: c.method.clone(),
                points: c.curve.points.iter().map(|p| (p.rate, p.metric)).collect(),
            })
            .collect();
        let baseline = of_metric.first().map(|c| c.curve.baseline);
        let label = metric.name().to_uppercase();
        let svg = line_plot(&format!("{label} rejection curves"), "rejection rate", &label, &series, baseline);
        ctx.out.write(&format!("curves/{}.svg", metric.name()), "plot", svg)?;
    }
    if let Some(mask) = &data.ood_mask {
        let precision = scores
            .iter()
            .map(|(m, s)| ood_precision(*m, s, mask, &grid))
            .collect::<Result<Vec<_>, _>>()?;
        ctx.out.write_json("curves/ood_precision.json", "diagnostic", &precision)?;
    }
    let report = OdropReport::new(curves);
    ctx.out.write("report.json", "report", report.to_json()?)?;
    Ok(report)
}

/// Mean |SHAP| per feature within the ID and the OOD rows.
#[derive(Serialize)]
struct GroupMeans {
    threshold: f64,
    n_id: usize,
    n_ood: usize,
    features: Vec<String>,
    mean_abs_id: Vec<f64>,
    mean_abs_ood: Vec<f64>,
}

fn group_means(shap: &ShapMatrix, threshold: f64) -> GroupMeans {
    let mean = |ood: bool| {
        let rows: Vec<&Vec<f64>> = shap
            .values
            .iter()
            .zip(&shap.ood_flags)
            .filter(|(_, &f)| f == ood)
            .map(|(r, _)| r)
            .collect();
        let n = rows.len().max(1) as f64;
        let means = (0..shap.n_cols())
            .map(|j| rows.iter().map(|r| r[j].abs()).sum::<f64>() / n)
            .collect();
        (rows.len(), means)
    };
    let (n_id, mean_abs_id) = mean(false);
    let (n_ood, mean_abs_ood) = mean(true);
    GroupMeans {
        threshold,
        n_id,
        n_ood,
        features: shap.feature_names.clone(),
        mean_abs_id,
        mean_abs_ood,
    }
}

fn explain(
    ctx: &mut Ctx,
    data: &Data,
    forest: &Forest,
    scores: &[f64],
    report: &OdropReport,
) -> Result<(), CliError> {
    let method = ctx.cfg.explain_method()?;
    let metric = ctx.cfg.explain.metric;
    let summary = report.summary(method.name(), metric).ok_or_else(|| {
        CliError::usage(format!("report has no {} curve for '{method}'", metric.name()))
    })?;
    let threshold = summary.peak_threshold;
    let mut x = predictor_input(ctx, &data.test, forest)?;
    let mut scores = scores;
    if scores.len() != x.n_rows() {
        return Err(CliError::runtime(format!(
            "{method} has {} scores for {} test rows",
            scores.len(),
            x.n_rows()
        )));
    }
    if let Some(k) = ctx.cfg.explain.max_rows.filter(|&k| k < x.n_rows()) {
        x = x.select_rows(&(0..k).collect::<Vec<_>>());
        scores = &scores[..k];
    }
    let shap = shap_matrix(forest, &x, scores, threshold)?;
    ctx.out.write_json("explain/shap.json", "shap", &shap)?;
    ctx.out
        .write_json("explain/group_means.json", "shap_summary", &group_means(&shap, threshold))?;

    if shap.n_rows() < 2 {
        return Err(CliError::runtime("explain needs at least two test rows"));
    }
    let rows = cluster_rows(&shap)?;
    let cols = if ctx.cfg.explain.cluster_columns && shap.n_cols() >= 2 {
        cluster_columns(&shap, ctx.cfg.explain.column_profile)?
    } else {
        Dendrogram::identity(shap.n_cols())
    };
    ctx.out.write("explain/dendrogram_rows.json", "dendrogram", rows.to_json()?)?;
    ctx.out.write("explain/dendrogram_cols.json", "dendrogram", cols.to_json()?)?;
    let svg = ctx.out.path("explain/heatmap.svg")?;
    ctx.out.track("explain/heatmap.svg", "plot");
    ctx.out.track("explain/heatmap.csv", "heatmap");
    heatmap_export(&shap, &rows, &cols, &svg)?;
    Ok(())
}
