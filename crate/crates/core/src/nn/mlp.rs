use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::adam::Adam;
use super::dense::{relu, relu_backward, Dense};
use super::{check_width, Fitted, TrainConfig};
use crate::error::{Error, Result};

/// Feed-forward classifier: ReLU hidden layers and a linear logit head.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub layers: Vec<Dense>,
}

/// Pre- and post-activation values of every layer for one batch.
struct Trace {
    inputs: Vec<Array2<f64>>,
    pre: Vec<Array2<f64>>,
}

/// Row-wise softmax.
pub fn softmax(logits: ArrayView2<f64>) -> Array2<f64> {
    let mut out = logits.to_owned();
    for mut row in out.rows_mut() {
        let max = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row /= sum;
    }
    out
}

fn log_softmax_row(row: ArrayView1<f64>) -> Array1<f64> {
    let max = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
    row.mapv(|v| v - lse)
}

impl Mlp {
    pub const DEFAULT_HIDDEN: [usize; 2] = [200, 50];

    pub fn new(inputs: usize, hidden: &[usize], classes: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut dims = vec![inputs];
        dims.extend_from_slice(hidden);
        dims.push(classes);
        Mlp {
            layers: dims
                .windows(2)
                .map(|w| Dense::he_uniform(w[0], w[1], &mut rng))
                .collect(),
        }
    }

    pub fn inputs(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn classes(&self) -> usize {
        self.layers.last().expect("non-empty").outputs()
    }

    fn trace(&self, x: ArrayView2<f64>) -> (Trace, Array2<f64>) {
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut a = x.to_owned();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let z = layer.forward(a.view());
            inputs.push(a);
            a = if i < last { relu(&z) } else { z.clone() };
            pre.push(z);
        }
        (Trace { inputs, pre }, a)
    }

    pub fn logits(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        check_width(self.inputs(), x.ncols())?;
        Ok(self.trace(x).1)
    }

    pub fn probabilities(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        Ok(softmax(self.logits(x)?.view()))
    }

    /// Activations of the last hidden layer.
    pub fn penultimate(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        check_width(self.inputs(), x.ncols())?;
        let (trace, _) = self.trace(x);
        Ok(trace.inputs.into_iter().last().expect("non-empty"))
    }

    /// Mean softmax cross-entropy (natural log).
    pub fn loss(&self, x: ArrayView2<f64>, y: &[usize]) -> Result<f64> {
        let logits = self.logits(x)?;
        Ok(logits
            .rows()
            .into_iter()
            .zip(y)
            .map(|(row, &c)| -log_softmax_row(row)[c])
            .sum::<f64>()
            / y.len() as f64)
    }

    /// Mean cross-entropy and its gradient with respect to every parameter.
    pub fn loss_and_grad(&self, x: ArrayView2<f64>, y: &[usize]) -> (f64, Vec<Dense>) {
        let n = y.len() as f64;
        let (trace, logits) = self.trace(x);
        let mut loss = 0.0;
        let mut d = softmax(logits.view());
        for (mut row, (&c, logit_row)) in d.rows_mut().into_iter().zip(y.iter().zip(logits.rows())) {
            loss -= log_softmax_row(logit_row)[c];
            row[c] -= 1.0;
        }
        d /= n;
        let mut grads = Vec::with_capacity(self.layers.len());
        for i in (0..self.layers.len()).rev() {
            if i + 1 < self.layers.len() {
                d = relu_backward(&trace.pre[i], d);
            }
            let (g, dx) = self.layers[i].backward(trace.inputs[i].view(), d.view());
            grads.push(g);
            d = dx;
        }
        grads.reverse();
        (loss / n, grads)
    }

    pub(crate) fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers.iter_mut().flat_map(|l| l.tensors_mut()).collect()
    }

    pub(crate) fn tensor_sizes(&self) -> Vec<usize> {
        self.layers.iter().flat_map(|l| l.tensors().map(<[f64]>::len)).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(Dense::is_finite)
    }
}

fn class_indices(labels: &[bool]) -> Vec<usize> {
    labels.iter().map(|&y| usize::from(y)).collect()
}

/// Minibatch Adam on softmax cross-entropy. Returns the final-epoch model.
pub fn fit_classifier(
    x: ArrayView2<f64>,
    labels: &[bool],
    config: &TrainConfig,
) -> Result<Fitted<Mlp>> {
    config.validate()?;
    if labels.len() != x.nrows() {
        return Err(Error::DimensionMismatch {
            expected: x.nrows(),
            got: labels.len(),
        });
    }
    let pos = labels.iter().filter(|&&y| y).count();
    if pos == 0 || pos == labels.len() {
        return Err(Error::SingleClass);
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("classifier features".into()));
    }
    let y = class_indices(labels);
    let mut model = Mlp::new(x.ncols(), &config.hidden, 2, config.seed);
    let mut adam = Adam::new(config.adam.clone(), &model.tensor_sizes());
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);
    let mut order: Vec<usize> = (0..x.nrows()).collect();
    let mut history = Vec::with_capacity(config.max_epochs);
    for epoch in 0..config.max_epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in order.chunks(config.batch_size) {
            let xb = x.select(Axis(0), batch);
            let yb: Vec<usize> = batch.iter().map(|&i| y[i]).collect();
            let (loss, grads) = model.loss_and_grad(xb.view(), &yb);
            if !loss.is_finite() {
                return Err(Error::NonFinite(format!(
                    "classifier loss at epoch {epoch} (seed {})",
                    config.seed
                )));
            }
            total += loss * batch.len() as f64;
            let g: Vec<&[f64]> = grads.iter().flat_map(|l| l.tensors()).collect();
            adam.step(model.tensors_mut(), g);
        }
        history.push(total / x.nrows() as f64);
    }
    if !model.is_finite() {
        return Err(Error::NonFinite("classifier parameters".into()));
    }
    Ok(Fitted {
        model,
        loss_history: history,
    })
}

pub fn train_classifier(x: ArrayView2<f64>, labels: &[bool], config: &TrainConfig) -> Result<Mlp> {
    Ok(fit_classifier(x, labels, config)?.model)
}

/// `members` classifiers trained with seeds `seed, seed + 1, …`, in seed order.
pub fn train_ensemble(
    x: ArrayView2<f64>,
    labels: &[bool],
    config: &TrainConfig,
    members: usize,
) -> Result<Vec<Mlp>> {
    if members == 0 {
        return Err(Error::InvalidArgument("ensemble needs >= 1 member".into()));
    }
    (0..members as u64)
        .into_par_iter()
        .map(|i| {
            let cfg = TrainConfig {
                seed: config.seed.wrapping_add(i),
                ..config.clone()
            };
            train_classifier(x, labels, &cfg)
        })
        .collect()
}
