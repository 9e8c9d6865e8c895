use std::path::{Path, PathBuf};

use odrop_core::explain::ColumnProfile;
use odrop_core::gbt::{BoostConfig, GridSpec};
use odrop_core::nn::TrainConfig;
use odrop_core::odrop::{default_rate_grid, MetricKind};
use odrop_core::ood::{OodMethod, OodTrainConfig};
use odrop_core::synth::ShiftScenario;
use odrop_core::tabular::Disease;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

/// Predictor training options.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PredictorConfig {
    /// Run the cross-validated grid search; otherwise `boost` is used as is.
    pub search: bool,
    pub grid: GridSpec,
    pub boost: BoostConfig,
    pub folds: usize,
    /// Keep this many features via recursive feature elimination.
    pub rfe_features: Option<usize>,
}

impl Default for PredictorConfig {
    fn default() -> Self {
        PredictorConfig {
            search: true,
            grid: GridSpec::default(),
            boost: BoostConfig::default(),
            folds: 5,
            rfe_features: None,
        }
    }
}

/// OOD model options. Unset fields keep the published defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OodConfig {
    pub classifier_epochs: Option<usize>,
    pub vae_epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub learning_rate: Option<f64>,
    pub ensemble_size: Option<usize>,
    pub temperature: Option<f64>,
}

impl OodConfig {
    pub fn train_config(&self, seed: u64) -> OodTrainConfig {
        let mut c = OodTrainConfig::default();
        let apply = |t: &mut TrainConfig, epochs: Option<usize>| {
            t.seed = seed;
            if let Some(e) = epochs {
                t.max_epochs = e;
            }
            if let Some(b) = self.batch_size {
                t.batch_size = b;
            }
            if let Some(lr) = self.learning_rate {
                t.adam.learning_rate = lr;
            }
        };
        apply(&mut c.classifier, self.classifier_epochs);
        apply(&mut c.vae, self.vae_epochs);
        if let Some(k) = self.ensemble_size {
            c.ensemble_size = k;
        }
        if let Some(t) = self.temperature {
            c.temperature = t;
        }
        c
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExplainConfig {
    /// Scorer whose peak-improvement threshold splits ID from OOD rows.
    pub method: String,
    pub metric: MetricKind,
    pub cluster_columns: bool,
    pub column_profile: ColumnProfile,
    /// Cap on explained test rows (first rows kept).
    pub max_rows: Option<usize>,
}

impl Default for ExplainConfig {
    fn default() -> Self {
        ExplainConfig {
            method: OodMethod::VaeReconstruction.name().into(),
            metric: MetricKind::Auroc,
            cluster_columns: true,
            column_profile: ColumnProfile::Absolute,
            max_rows: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LabelConfig {
    pub disease: Disease,
    pub year_t_csv: Option<PathBuf>,
    pub year_t1_csv: Option<PathBuf>,
    pub subject_column: String,
    /// Hypertension at 130/80 mmHg instead of 140/90.
    pub lowered_hypertension: bool,
}

impl Default for LabelConfig {
    fn default() -> Self {
        LabelConfig {
            disease: Disease::Diabetes,
            year_t_csv: None,
            year_t1_csv: None,
            subject_column: "id".into(),
            lowered_hypertension: false,
        }
    }
}

/// Everything a command reads. Loaded from JSON, then overridden by flags.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub train_csv: Option<PathBuf>,
    pub test_csv: Option<PathBuf>,
    pub scenario: Option<ShiftScenario>,
    pub label_column: String,
    /// Columns that are neither features nor the label, e.g. subject ids.
    pub exclude_columns: Vec<String>,
    pub methods: Vec<String>,
    pub rate_grid: Vec<f64>,
    pub seed: u64,
    /// Directory holding artifacts of earlier commands; defaults to the
    /// output directory.
    pub artifacts_dir: Option<PathBuf>,
    pub predictor: PredictorConfig,
    pub ood: OodConfig,
    pub explain: ExplainConfig,
    pub label: LabelConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            train_csv: None,
            test_csv: None,
            scenario: None,
            label_column: "label".into(),
            exclude_columns: Vec::new(),
            methods: OodMethod::ALL.iter().map(|m| m.name().to_string()).collect(),
            rate_grid: default_rate_grid(),
            seed: 0,
            artifacts_dir: None,
            predictor: PredictorConfig::default(),
            ood: OodConfig::default(),
            explain: ExplainConfig::default(),
            label: LabelConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::usage(format!("invalid config {}: {e}", path.display())))
    }

    pub fn parsed_methods(&self) -> Result<Vec<OodMethod>, CliError> {
        if self.methods.is_empty() {
            return Err(CliError::usage("no OOD methods selected"));
        }
        let mut out: Vec<OodMethod> = Vec::new();
        for token in &self.methods {
            let m = token
                .parse()
                .map_err(|_| CliError::usage(format!("unknown OOD method '{token}'")))?;
            if !out.contains(&m) {
                out.push(m);
            }
        }
        Ok(out)
    }

    pub fn explain_method(&self) -> Result<OodMethod, CliError> {
        self.explain.method.parse().map_err(|_| {
            CliError::usage(format!("unknown OOD method '{}'", self.explain.method))
        })
    }

    /// Checks fields every command relies on.
    pub fn validate(&self) -> Result<(), CliError> {
        self.parsed_methods()?;
        self.explain_method()?;
        if let Some(s) = &self.scenario {
            s.validate().map_err(|e| CliError::usage(format!("scenario: {e}")))?;
        }
        self.predictor
            .grid
            .validate()
            .and_then(|_| self.predictor.boost.validate())
            .map_err(|e| CliError::usage(format!("predictor: {e}")))?;
        if self.predictor.folds < 2 {
            return Err(CliError::usage("predictor.folds must be >= 2"));
        }
        if self.rate_grid.is_empty()
            || self.rate_grid.windows(2).any(|w| w[1] <= w[0])
            || self.rate_grid.iter().any(|r| !(0.0..=0.4).contains(r))
        {
            return Err(CliError::usage(
                "rate_grid must be strictly increasing within [0, 0.4]",
            ));
        }
        let ood = self.ood.train_config(self.seed);
        ood.classifier
            .validate()
            .and_then(|_| ood.vae.validate())
            .map_err(|e| CliError::usage(format!("ood: {e}")))?;
        for p in [&self.train_csv, &self.test_csv].into_iter().flatten() {
            if !p.exists() {
                return Err(CliError::usage(format!("input {} does not exist", p.display())));
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }
}
