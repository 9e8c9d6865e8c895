use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::adam::Adam;
use super::dense::{relu, relu_backward, Dense};
use super::{check_width, Fitted, TrainConfig};
use crate::error::{Error, Result};

/// Gaussian VAE with one ReLU hidden layer on each side and a unit-variance
/// Gaussian decoder, so the reconstruction term is half the squared error.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Vae {
    pub enc: Dense,
    pub mean: Dense,
    pub log_var: Dense,
    pub dec: Dense,
    pub out: Dense,
}

/// Per-batch loss split into its two terms (both batch means).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VaeLoss {
    pub reconstruction: f64,
    pub kl: f64,
}

impl VaeLoss {
    pub fn total(&self) -> f64 {
        self.reconstruction + self.kl
    }
}

/// `KL(N(μ, e^{lv}) ‖ N(0, I))` summed over latent dimensions.
pub fn kl_standard_normal(mu: &[f64], log_var: &[f64]) -> f64 {
    -0.5 * mu
        .iter()
        .zip(log_var)
        .map(|(m, lv)| 1.0 + lv - m * m - lv.exp())
        .sum::<f64>()
}

impl Vae {
    pub const DEFAULT_HIDDEN: usize = 200;
    pub const DEFAULT_LATENT: usize = 75;

    pub fn new(inputs: usize, hidden: usize, latent: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Vae {
            enc: Dense::he_uniform(inputs, hidden, &mut rng),
            mean: Dense::he_uniform(hidden, latent, &mut rng),
            log_var: Dense::he_uniform(hidden, latent, &mut rng),
            dec: Dense::he_uniform(latent, hidden, &mut rng),
            out: Dense::he_uniform(hidden, inputs, &mut rng),
        }
    }

    pub fn zeros(inputs: usize, hidden: usize, latent: usize) -> Self {
        Vae {
            enc: Dense::zeros(inputs, hidden),
            mean: Dense::zeros(hidden, latent),
            log_var: Dense::zeros(hidden, latent),
            dec: Dense::zeros(latent, hidden),
            out: Dense::zeros(hidden, inputs),
        }
    }

    pub fn inputs(&self) -> usize {
        self.enc.inputs()
    }

    pub fn latent(&self) -> usize {
        self.mean.outputs()
    }

    fn layers(&self) -> [&Dense; 5] {
        [&self.enc, &self.mean, &self.log_var, &self.dec, &self.out]
    }

    /// Encoder mean and log-variance.
    pub fn encode(&self, x: ArrayView2<f64>) -> Result<(Array2<f64>, Array2<f64>)> {
        check_width(self.inputs(), x.ncols())?;
        let h = relu(&self.enc.forward(x));
        Ok((self.mean.forward(h.view()), self.log_var.forward(h.view())))
    }

    pub fn decode(&self, z: ArrayView2<f64>) -> Result<Array2<f64>> {
        check_width(self.latent(), z.ncols())?;
        let h = relu(&self.dec.forward(z));
        Ok(self.out.forward(h.view()))
    }

    /// Deterministic reconstruction: decode the encoder mean, no sampling.
    pub fn reconstruct(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        let (mu, _) = self.encode(x)?;
        self.decode(mu.view())
    }

    /// Negative ELBO and its gradient for a fixed noise draw `eps`
    /// (`batch × latent`).
    pub fn loss_and_grad(&self, x: ArrayView2<f64>, eps: ArrayView2<f64>) -> (VaeLoss, Vae) {
        let n = x.nrows() as f64;
        let z1 = self.enc.forward(x);
        let h1 = relu(&z1);
        let mu = self.mean.forward(h1.view());
        let lv = self.log_var.forward(h1.view());
        let sd = lv.mapv(|v| (0.5 * v).exp());
        let z = &mu + &(&sd * &eps);
        let z2 = self.dec.forward(z.view());
        let h2 = relu(&z2);
        let x_hat = self.out.forward(h2.view());

        let diff = &x_hat - &x;
        let reconstruction = 0.5 * diff.iter().map(|d| d * d).sum::<f64>() / n;
        let kl = mu
            .iter()
            .zip(lv.iter())
            .map(|(m, v)| -0.5 * (1.0 + v - m * m - v.exp()))
            .sum::<f64>()
            / n;

        let d_out = diff / n;
        let (g_out, d_h2) = self.out.backward(h2.view(), d_out.view());
        let d_z2 = relu_backward(&z2, d_h2);
        let (g_dec, d_z) = self.dec.backward(z.view(), d_z2.view());
        let d_mu = &d_z + &(&mu / n);
        let d_lv = &(&d_z * &eps * &sd * 0.5) + &(lv.mapv(|v| 0.5 * (v.exp() - 1.0)) / n);
        let (g_mean, d_h1_a) = self.mean.backward(h1.view(), d_mu.view());
        let (g_lv, d_h1_b) = self.log_var.backward(h1.view(), d_lv.view());
        let d_z1 = relu_backward(&z1, d_h1_a + d_h1_b);
        let (g_enc, _) = self.enc.backward(x, d_z1.view());

        (
            VaeLoss { reconstruction, kl },
            Vae {
                enc: g_enc,
                mean: g_mean,
                log_var: g_lv,
                dec: g_dec,
                out: g_out,
            },
        )
    }

    pub(crate) fn tensors(&self) -> Vec<&[f64]> {
        self.layers().into_iter().flat_map(|l| l.tensors()).collect()
    }

    pub(crate) fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        [
            &mut self.enc,
            &mut self.mean,
            &mut self.log_var,
            &mut self.dec,
            &mut self.out,
        ]
        .into_iter()
        .flat_map(|l| l.tensors_mut())
        .collect()
    }

    pub fn is_finite(&self) -> bool {
        self.layers().iter().all(|l| l.is_finite())
    }
}

pub fn fit_vae(x: ArrayView2<f64>, config: &TrainConfig) -> Result<Fitted<Vae>> {
    config.validate()?;
    if x.nrows() == 0 {
        return Err(Error::InvalidArgument("no training rows".into()));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("VAE features".into()));
    }
    let hidden = config.hidden.first().copied().unwrap_or(Vae::DEFAULT_HIDDEN);
    let mut model = Vae::new(x.ncols(), hidden, config.latent, config.seed);
    let sizes: Vec<usize> = model.tensors().iter().map(|t| t.len()).collect();
    let mut adam = Adam::new(config.adam.clone(), &sizes);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);
    let mut order: Vec<usize> = (0..x.nrows()).collect();
    let mut history = Vec::with_capacity(config.max_epochs);
    for epoch in 0..config.max_epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in order.chunks(config.batch_size) {
            let xb = x.select(Axis(0), batch);
            let eps = Array2::from_shape_simple_fn((batch.len(), config.latent), || {
                StandardNormal.sample(&mut rng)
            });
            let (loss, grads) = model.loss_and_grad(xb.view(), eps.view());
            if !loss.total().is_finite() {
                return Err(Error::NonFinite(format!(
                    "VAE loss at epoch {epoch} (seed {})",
                    config.seed
                )));
            }
            total += loss.total() * batch.len() as f64;
            adam.step(model.tensors_mut(), grads.tensors());
        }
        history.push(total / x.nrows() as f64);
    }
    if !model.is_finite() {
        return Err(Error::NonFinite("VAE parameters".into()));
    }
    Ok(Fitted {
        model,
        loss_history: history,
    })
}

pub fn train_vae(x: ArrayView2<f64>, config: &TrainConfig) -> Result<Vae> {
    Ok(fit_vae(x, config)?.model)
}

/// `decode(encoder mean)` for every row.
pub fn vae_reconstruct(model: &Vae, x: ArrayView2<f64>) -> Result<Array2<f64>> {
    model.reconstruct(x)
}
