use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use odrop_core::synth::ShiftScenario;

use crate::config::RunConfig;
use crate::CliError;

#[derive(Debug, Parser)]
#[command(name = "odrop", version, about = "Reject out-of-distribution records before prediction")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic shift scenario as train/test CSVs.
    Synth(CommonArgs),
    /// Derive one-year onset labels from two checkup years.
    Label(CommonArgs),
    /// Per-column shift tests and density plots, train vs test.
    ShiftTest(CommonArgs),
    /// Grid search, optional RFE, and the final boosted-tree predictor.
    TrainPredictor(CommonArgs),
    /// Train the OOD scorers.
    TrainOod(CommonArgs),
    /// Score the test set with trained scorers.
    Score(CommonArgs),
    /// Rejection curves, report and plots from predictor and scores.
    RejectCurve(CommonArgs),
    /// SHAP matrix, Ward dendrograms and heatmap for the test set.
    Explain(CommonArgs),
    /// Every step above, end to end.
    Pipeline(CommonArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Synth(_) => "synth",
            Command::Label(_) => "label",
            Command::ShiftTest(_) => "shift-test",
            Command::TrainPredictor(_) => "train-predictor",
            Command::TrainOod(_) => "train-ood",
            Command::Score(_) => "score",
            Command::RejectCurve(_) => "reject-curve",
            Command::Explain(_) => "explain",
            Command::Pipeline(_) => "pipeline",
        }
    }

    pub fn args(&self) -> &CommonArgs {
        match self {
            Command::Synth(a)
            | Command::Label(a)
            | Command::ShiftTest(a)
            | Command::TrainPredictor(a)
            | Command::TrainOod(a)
            | Command::Score(a)
            | Command::RejectCurve(a)
            | Command::Explain(a)
            | Command::Pipeline(a) => a,
        }
    }
}

/// Flags shared by all commands. Each overrides the matching config field.
#[derive(Clone, Debug, Default, Args)]
pub struct CommonArgs {
    /// JSON run config; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, env = "ODROP_OUT_DIR", default_value = "odrop-out")]
    pub out: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub threads: Option<usize>,

    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub train: Option<PathBuf>,
    #[arg(long)]
    pub test: Option<PathBuf>,
    /// Synthetic scenario JSON.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    #[arg(long)]
    pub label_column: Option<String>,
    #[arg(long, value_delimiter = ',')]
    pub exclude_columns: Option<Vec<String>>,
    /// Comma-separated OOD method names.
    #[arg(long, value_delimiter = ',')]
    pub methods: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    pub rate_grid: Option<Vec<f64>>,
    /// Where earlier commands wrote their artifacts.
    #[arg(long)]
    pub artifacts: Option<PathBuf>,

    // scenario fields
    #[arg(long)]
    pub n_train: Option<usize>,
    #[arg(long)]
    pub n_test: Option<usize>,
    /// Feature count; with --shift-norm builds a uniform-shift scenario.
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub shift_norm: Option<f64>,
    #[arg(long)]
    pub ood_fraction: Option<f64>,
    #[arg(long)]
    pub label_noise_ood: Option<f64>,
    #[arg(long)]
    pub cov_scale: Option<f64>,
    #[arg(long)]
    pub positive_rate: Option<f64>,
    #[arg(long)]
    pub label_sharpness: Option<f64>,
    #[arg(long)]
    pub scenario_seed: Option<u64>,

    // predictor
    /// Skip the grid search and use the boosting flags as given.
    #[arg(long)]
    pub no_search: bool,
    #[arg(long)]
    pub folds: Option<usize>,
    #[arg(long)]
    pub rfe_features: Option<usize>,
    #[arg(long)]
    pub n_estimators: Option<usize>,
    #[arg(long)]
    pub max_depth: Option<usize>,
    #[arg(long)]
    pub min_child_weight: Option<f64>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,

    // OOD models
    #[arg(long)]
    pub classifier_epochs: Option<usize>,
    #[arg(long)]
    pub vae_epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub ensemble_size: Option<usize>,
    #[arg(long)]
    pub temperature: Option<f64>,

    // explain
    #[arg(long)]
    pub explain_method: Option<String>,
    #[arg(long)]
    pub explain_metric: Option<String>,
    #[arg(long)]
    pub no_column_clustering: bool,
    /// `absolute` or `raw`.
    #[arg(long)]
    pub column_profile: Option<String>,
    #[arg(long)]
    pub max_rows: Option<usize>,

    // label
    #[arg(long)]
    pub disease: Option<String>,
    #[arg(long)]
    pub year_t: Option<PathBuf>,
    #[arg(long)]
    pub year_t1: Option<PathBuf>,
    #[arg(long)]
    pub subject_column: Option<String>,
    #[arg(long)]
    pub lowered_hypertension: bool,
}

fn parsed<T: std::str::FromStr>(flag: &str, value: &str) -> Result<T, CliError> {
    value
        .parse()
        .map_err(|_| CliError::usage(format!("invalid value '{value}' for --{flag}")))
}

impl CommonArgs {
    /// Config file (if any) with every given flag applied on top.
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut c = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        macro_rules! set {
            ($flag:expr => $field:expr) => {
                if let Some(v) = &$flag {
                    $field = v.clone();
                }
            };
        }
        set!(self.seed => c.seed);
        if let Some(p) = &self.train {
            c.train_csv = Some(p.clone());
        }
        if let Some(p) = &self.test {
            c.test_csv = Some(p.clone());
        }
        if let Some(p) = &self.artifacts {
            c.artifacts_dir = Some(p.clone());
        }
        set!(self.label_column => c.label_column);
        set!(self.exclude_columns => c.exclude_columns);
        set!(self.methods => c.methods);
        set!(self.rate_grid => c.rate_grid);

        if let Some(p) = &self.scenario {
            c.scenario = Some(ShiftScenario::load(p).map_err(|e| {
                CliError::usage(format!("scenario {}: {e}", p.display()))
            })?);
        }
        if let (Some(d), Some(norm)) = (self.dim, self.shift_norm) {
            let seed = c.scenario.as_ref().map_or(0, |s| s.seed);
            c.scenario = Some(ShiftScenario {
                seed,
                ..ShiftScenario::with_uniform_shift(d, norm)
            });
        } else if self.dim.is_some() != self.shift_norm.is_some() {
            return Err(CliError::usage("--dim and --shift-norm go together"));
        }
        let scenario_flags = self.n_train.is_some()
            || self.n_test.is_some()
            || self.ood_fraction.is_some()
            || self.label_noise_ood.is_some()
            || self.cov_scale.is_some()
            || self.positive_rate.is_some()
            || self.label_sharpness.is_some()
            || self.scenario_seed.is_some();
        if scenario_flags {
            let s = c.scenario.as_mut().ok_or_else(|| {
                CliError::usage("scenario flags need --scenario, --dim/--shift-norm or a config scenario")
            })?;
            set!(self.n_train => s.n_train);
            set!(self.n_test => s.n_test);
            set!(self.ood_fraction => s.ood_fraction);
            set!(self.label_noise_ood => s.label_noise_ood);
            set!(self.cov_scale => s.cov_scale);
            set!(self.positive_rate => s.positive_rate);
            set!(self.label_sharpness => s.label_sharpness);
            set!(self.scenario_seed => s.seed);
        }

        let p = &mut c.predictor;
        if self.no_search {
            p.search = false;
        }
        set!(self.folds => p.folds);
        if let Some(k) = self.rfe_features {
            p.rfe_features = Some(k);
        }
        set!(self.n_estimators => p.boost.n_estimators);
        set!(self.max_depth => p.boost.max_depth);
        set!(self.min_child_weight => p.boost.min_child_weight);
        set!(self.eta => p.boost.eta);
        set!(self.lambda => p.boost.lambda);

        let o = &mut c.ood;
        for (flag, field) in [
            (self.classifier_epochs, &mut o.classifier_epochs),
            (self.vae_epochs, &mut o.vae_epochs),
            (self.batch_size, &mut o.batch_size),
            (self.ensemble_size, &mut o.ensemble_size),
        ] {
            if flag.is_some() {
                *field = flag;
            }
        }
        if self.learning_rate.is_some() {
            o.learning_rate = self.learning_rate;
        }
        if self.temperature.is_some() {
            o.temperature = self.temperature;
        }

        let e = &mut c.explain;
        set!(self.explain_method => e.method);
        if let Some(m) = &self.explain_metric {
            e.metric = parsed("explain-metric", m)?;
        }
        if self.no_column_clustering {
            e.cluster_columns = false;
        }
        if let Some(p) = &self.column_profile {
            e.column_profile = parsed("column-profile", p)?;
        }
        if self.max_rows.is_some() {
            e.max_rows = self.max_rows;
        }

        let l = &mut c.label;
        if let Some(d) = &self.disease {
            l.disease = parsed("disease", d)?;
        }
        if let Some(p) = &self.year_t {
            l.year_t_csv = Some(p.clone());
        }
        if let Some(p) = &self.year_t1 {
            l.year_t1_csv = Some(p.clone());
        }
        set!(self.subject_column => l.subject_column);
        if self.lowered_hypertension {
            l.lowered_hypertension = true;
        }

        c.validate()?;
        Ok(c)
    }
}
