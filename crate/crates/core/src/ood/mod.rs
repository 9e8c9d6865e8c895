//! Five OOD scores, all oriented so that a higher score means more
//! out-of-distribution.

mod formulas;
mod gem;

pub use formulas::{
    binary_entropy_bits, energy, ensemble_epistemic, ensemble_std, logsumexp, reconstruction_loss,
};
pub use gem::{fit_gem_features, FeatureLayer, GemParams};

use std::path::Path;
use std::str::FromStr;

use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{train_ensemble, train_vae, Mlp, TrainConfig, Vae};
use crate::tabular::{Preprocessor, Table};

pub const SCORER_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OodMethod {
    VaeReconstruction,
    EnsembleStd,
    EnsembleEpistemic,
    Energy,
    Gem,
}

impl OodMethod {
    pub const ALL: [OodMethod; 5] = [
        OodMethod::VaeReconstruction,
        OodMethod::EnsembleStd,
        OodMethod::EnsembleEpistemic,
        OodMethod::Energy,
        OodMethod::Gem,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OodMethod::VaeReconstruction => "vae_reconstruction",
            OodMethod::EnsembleStd => "ensemble_std",
            OodMethod::EnsembleEpistemic => "ensemble_epistemic",
            OodMethod::Energy => "energy",
            OodMethod::Gem => "gem",
        }
    }

    /// True when the underlying formula is larger for in-distribution inputs
    /// and the reported score is its negation.
    pub fn orientation_flip(self) -> bool {
        self == OodMethod::Gem
    }
}

impl std::fmt::Display for OodMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OodMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        OodMethod::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown OOD method '{s}'")))
    }
}

fn positive_probs(members: &[Mlp], x: ArrayView2<f64>) -> Result<Array2<f64>> {
    let mut out = Array2::zeros((x.nrows(), members.len()));
    for (j, m) in members.iter().enumerate() {
        out.column_mut(j).assign(&m.probabilities(x)?.column(1));
    }
    Ok(out)
}

pub fn score_vae_reconstruction(vae: &Vae, x: ArrayView2<f64>) -> Result<Vec<f64>> {
    let r = vae.reconstruct(x)?;
    x.rows()
        .into_iter()
        .zip(r.rows())
        .map(|(a, b)| reconstruction_loss(&a.to_vec(), &b.to_vec()))
        .collect()
}

pub fn score_ensemble_std(members: &[Mlp], x: ArrayView2<f64>) -> Result<Vec<f64>> {
    let p = positive_probs(members, x)?;
    p.rows().into_iter().map(|r| ensemble_std(&r.to_vec())).collect()
}

pub fn score_ensemble_epistemic(members: &[Mlp], x: ArrayView2<f64>) -> Result<Vec<f64>> {
    let p = positive_probs(members, x)?;
    p.rows().into_iter().map(|r| ensemble_epistemic(&r.to_vec())).collect()
}

pub fn score_energy(mlp: &Mlp, x: ArrayView2<f64>, temperature: f64) -> Result<Vec<f64>> {
    let logits = mlp.logits(x)?;
    logits.rows().into_iter().map(|r| energy(&r.to_vec(), temperature)).collect()
}

/// Class means and pooled covariance of the classifier's last hidden layer.
pub fn fit_gem(mlp: &Mlp, x: ArrayView2<f64>, labels: &[bool]) -> Result<GemParams> {
    let h = mlp.penultimate(x)?;
    let classes: Vec<usize> = labels.iter().map(|&y| usize::from(y)).collect();
    fit_gem_features(h.view(), &classes, mlp.classes())
}

/// Negated GEM, so that larger is more OOD.
pub fn score_gem(params: &GemParams, mlp: &Mlp, x: ArrayView2<f64>) -> Result<Vec<f64>> {
    let h = mlp.penultimate(x)?;
    h.rows().into_iter().map(|r| Ok(-params.raw_gem(&r.to_vec())?)).collect()
}

/// A trained scorer with its model artifacts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum OodScorer {
    VaeReconstruction { vae: Vae },
    EnsembleStd { members: Vec<Mlp> },
    EnsembleEpistemic { members: Vec<Mlp> },
    Energy { mlp: Mlp, temperature: f64 },
    Gem { mlp: Mlp, params: GemParams },
}

impl OodScorer {
    pub fn method(&self) -> OodMethod {
        match self {
            OodScorer::VaeReconstruction { .. } => OodMethod::VaeReconstruction,
            OodScorer::EnsembleStd { .. } => OodMethod::EnsembleStd,
            OodScorer::EnsembleEpistemic { .. } => OodMethod::EnsembleEpistemic,
            OodScorer::Energy { .. } => OodMethod::Energy,
            OodScorer::Gem { .. } => OodMethod::Gem,
        }
    }

    pub fn score(&self, x: ArrayView2<f64>) -> Result<Vec<f64>> {
        match self {
            OodScorer::VaeReconstruction { vae } => score_vae_reconstruction(vae, x),
            OodScorer::EnsembleStd { members } => score_ensemble_std(members, x),
            OodScorer::EnsembleEpistemic { members } => score_ensemble_epistemic(members, x),
            OodScorer::Energy { mlp, temperature } => score_energy(mlp, x, *temperature),
            OodScorer::Gem { mlp, params } => score_gem(params, mlp, x),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OodTrainConfig {
    pub classifier: TrainConfig,
    pub vae: TrainConfig,
    pub ensemble_size: usize,
    pub temperature: f64,
}

impl Default for OodTrainConfig {
    fn default() -> Self {
        OodTrainConfig {
            classifier: TrainConfig::classifier(),
            vae: TrainConfig::vae(),
            ensemble_size: 5,
            temperature: 1.0,
        }
    }
}

/// Trains the requested scorers on preprocessed features. The classifier
/// ensemble is trained once and shared: energy and GEM use member 0.
pub fn train_scorers(
    methods: &[OodMethod],
    x: ArrayView2<f64>,
    labels: &[bool],
    config: &OodTrainConfig,
) -> Result<Vec<OodScorer>> {
    let needs_vae = methods.contains(&OodMethod::VaeReconstruction);
    let needs_ensemble = methods.iter().any(|m| *m != OodMethod::VaeReconstruction);
    let ensemble_members = if methods
        .iter()
        .any(|m| matches!(m, OodMethod::EnsembleStd | OodMethod::EnsembleEpistemic))
    {
        if config.ensemble_size < 2 {
            return Err(Error::InvalidArgument("ensemble scores need >= 2 members".into()));
        }
        config.ensemble_size
    } else {
        1
    };
    let (vae, ensemble) = rayon::join(
        || needs_vae.then(|| train_vae(x, &config.vae)).transpose(),
        || {
            needs_ensemble
                .then(|| train_ensemble(x, labels, &config.classifier, ensemble_members))
                .transpose()
        },
    );
    let vae = vae?;
    let ensemble = ensemble?;
    methods
        .par_iter()
        .map(|&m| {
            Ok(match m {
                OodMethod::VaeReconstruction => OodScorer::VaeReconstruction {
                    vae: vae.clone().expect("trained"),
                },
                OodMethod::EnsembleStd => OodScorer::EnsembleStd {
                    members: ensemble.clone().expect("trained"),
                },
                OodMethod::EnsembleEpistemic => OodScorer::EnsembleEpistemic {
                    members: ensemble.clone().expect("trained"),
                },
                OodMethod::Energy => OodScorer::Energy {
                    mlp: ensemble.as_ref().expect("trained")[0].clone(),
                    temperature: config.temperature,
                },
                OodMethod::Gem => {
                    let mlp = ensemble.as_ref().expect("trained")[0].clone();
                    let params = fit_gem(&mlp, x, labels)?;
                    OodScorer::Gem { mlp, params }
                }
            })
        })
        .collect()
}

/// A scorer bundled with the preprocessing that maps a [`Table`] to its input.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScorerArtifact {
    pub format_version: u32,
    pub preprocessor: Preprocessor,
    pub scorer: OodScorer,
}

impl ScorerArtifact {
    pub fn new(preprocessor: Preprocessor, scorer: OodScorer) -> Self {
        ScorerArtifact {
            format_version: SCORER_FORMAT_VERSION,
            preprocessor,
            scorer,
        }
    }

    pub fn method(&self) -> OodMethod {
        self.scorer.method()
    }

    pub fn score_table(&self, table: &Table) -> Result<Vec<f64>> {
        let x = self.preprocessor.transform(table)?;
        self.scorer.score(x.view())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let a: ScorerArtifact = serde_json::from_str(text)?;
        if a.format_version != SCORER_FORMAT_VERSION {
            return Err(Error::FormatVersion {
                found: a.format_version,
                expected: SCORER_FORMAT_VERSION,
            });
        }
        Ok(a)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

/// Fits the preprocessor on `train` and trains each requested scorer.
pub fn train_artifacts(
    methods: &[OodMethod],
    train: &Table,
    labels: &[bool],
    config: &OodTrainConfig,
) -> Result<Vec<ScorerArtifact>> {
    let pre = Preprocessor::fit(train)?;
    let x = pre.transform(train)?;
    Ok(train_scorers(methods, x.view(), labels, config)?
        .into_iter()
        .map(|s| ScorerArtifact::new(pre.clone(), s))
        .collect())
}
