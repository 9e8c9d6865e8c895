//! Feed-forward networks with hand-derived gradients: an MLP classifier and a
//! Gaussian VAE, trained with Adam.

mod adam;
mod dense;
mod mlp;
mod vae;

pub use adam::{Adam, AdamConfig};
pub use dense::Dense;
pub use mlp::{fit_classifier, softmax, train_classifier, train_ensemble, Mlp};
pub use vae::{fit_vae, kl_standard_normal, train_vae, vae_reconstruct, Vae, VaeLoss};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub adam: AdamConfig,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub seed: u64,
    /// Hidden widths. The VAE uses the first entry.
    pub hidden: Vec<usize>,
    /// VAE latent dimension.
    pub latent: usize,
}

impl TrainConfig {
    pub fn classifier() -> Self {
        TrainConfig {
            adam: AdamConfig::default(),
            batch_size: 32,
            max_epochs: 100,
            seed: 0,
            hidden: Mlp::DEFAULT_HIDDEN.to_vec(),
            latent: Vae::DEFAULT_LATENT,
        }
    }

    pub fn vae() -> Self {
        TrainConfig {
            max_epochs: 400,
            hidden: vec![Vae::DEFAULT_HIDDEN],
            ..Self::classifier()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.adam.learning_rate > 0.0
            && self.batch_size > 0
            && self.max_epochs > 0
            && self.latent > 0
            && !self.hidden.is_empty()
            && self.hidden.iter().all(|&h| h > 0);
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid training config {self:?}")))
        }
    }
}

/// A trained model and its mean training loss per epoch.
#[derive(Clone, Debug)]
pub struct Fitted<M> {
    pub model: M,
    pub loss_history: Vec<f64>,
}

pub(crate) fn check_width(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

#[derive(Serialize, Deserialize)]
struct Versioned<M> {
    format_version: u32,
    model: M,
}

pub fn model_to_json<M: Serialize>(model: &M) -> Result<String> {
    Ok(serde_json::to_string(&Versioned {
        format_version: MODEL_FORMAT_VERSION,
        model,
    })?)
}

pub fn model_from_json<M: DeserializeOwned>(text: &str) -> Result<M> {
    let v: Versioned<M> = serde_json::from_str(text)?;
    if v.format_version != MODEL_FORMAT_VERSION {
        return Err(Error::FormatVersion {
            found: v.format_version,
            expected: MODEL_FORMAT_VERSION,
        });
    }
    Ok(v.model)
}
