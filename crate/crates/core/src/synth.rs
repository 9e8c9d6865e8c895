//! Paired training-site / shifted-site datasets with a known OOD subpopulation.
//!
//! The base distribution is a two-component Gaussian mixture whose components
//! share a low-rank covariance `L Lᵀ + σ²I`. Labels follow a logistic rule in a
//! seed-fixed direction, with the bias solved by bisection so the base positive
//! rate matches the scenario. Shifted rows add `mean_shift`, scale the
//! deviations by `sqrt(cov_scale)`, and flip each label with probability
//! `label_noise_ood`.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tabular::{ColumnMeta, Table};

const RANK: usize = 3;
const NOISE_SD: f64 = 0.5;
const COMPONENT_OFFSET: f64 = 1.5;
const CALIBRATION_DRAWS: usize = 20_000;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OodCount {
    /// Exactly `round(ood_fraction * n_test)` shifted rows.
    #[default]
    Exact,
    /// Each test row is shifted independently with probability `ood_fraction`.
    Binomial,
}

fn default_sharpness() -> f64 {
    8.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShiftScenario {
    pub n_train: usize,
    pub n_test: usize,
    pub d: usize,
    pub ood_fraction: f64,
    pub mean_shift: Vec<f64>,
    pub cov_scale: f64,
    /// Probability that a shifted row's label is flipped.
    pub label_noise_ood: f64,
    pub positive_rate: f64,
    pub seed: u64,
    /// Slope of the logistic labeling rule per standard deviation of the
    /// projected feature. Larger values make base labels more deterministic.
    #[serde(default = "default_sharpness")]
    pub label_sharpness: f64,
    #[serde(default)]
    pub ood_count: OodCount,
}

impl ShiftScenario {
    /// Scenario whose shift spreads `shift_norm` evenly over all `d` features.
    pub fn with_uniform_shift(d: usize, shift_norm: f64) -> Self {
        let per = if d == 0 { 0.0 } else { shift_norm / (d as f64).sqrt() };
        ShiftScenario {
            n_train: 8000,
            n_test: 4000,
            d,
            ood_fraction: 0.3,
            mean_shift: vec![per; d],
            cov_scale: 1.0,
            label_noise_ood: 0.5,
            positive_rate: 0.3,
            seed: 0,
            label_sharpness: default_sharpness(),
            ood_count: OodCount::Exact,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.d == 0 {
            return bad("d must be >= 1".into());
        }
        if self.n_train < 2 || self.n_test == 0 {
            return bad("n_train must be >= 2 and n_test >= 1".into());
        }
        if self.mean_shift.len() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                got: self.mean_shift.len(),
            });
        }
        if self.mean_shift.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("mean_shift".into()));
        }
        if !(0.0..=1.0).contains(&self.ood_fraction) {
            return bad(format!("ood_fraction {} outside [0, 1]", self.ood_fraction));
        }
        if !(0.0..=1.0).contains(&self.label_noise_ood) {
            return bad(format!("label_noise_ood {} outside [0, 1]", self.label_noise_ood));
        }
        if !(self.positive_rate > 0.0 && self.positive_rate < 1.0) {
            return bad(format!("positive_rate {} outside (0, 1)", self.positive_rate));
        }
        if !(self.cov_scale > 0.0 && self.cov_scale.is_finite()) {
            return bad(format!("cov_scale {} must be > 0", self.cov_scale));
        }
        if !(self.label_sharpness > 0.0 && self.label_sharpness.is_finite()) {
            return bad("label_sharpness must be > 0".into());
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let s: ShiftScenario = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthData {
    pub train: Table,
    pub train_labels: Vec<bool>,
    pub test: Table,
    pub test_labels: Vec<bool>,
    /// True for test rows drawn from the shifted distribution.
    pub ood_mask: Vec<bool>,
}

/// Seed-fixed parameters of the base distribution and labeling rule.
#[derive(Clone, Debug)]
pub struct BaseModel {
    d: usize,
    means: [Vec<f64>; 2],
    /// `d × RANK`, row-major.
    loadings: Vec<f64>,
    direction: Vec<f64>,
    /// `sharpness / sd(direction · x)`.
    slope: f64,
    bias: f64,
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn unit_vector(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| normal(rng)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

impl BaseModel {
    fn new(d: usize, sharpness: f64, positive_rate: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let axis = unit_vector(&mut rng, d);
        let means = [
            axis.iter().map(|a| COMPONENT_OFFSET * a).collect(),
            axis.iter().map(|a| -COMPONENT_OFFSET * a).collect(),
        ];
        let loadings = (0..d * RANK)
            .map(|_| normal(&mut rng) / (RANK as f64).sqrt())
            .collect();
        let direction = unit_vector(&mut rng, d);
        let mut model = BaseModel {
            d,
            means,
            loadings,
            direction,
            slope: 1.0,
            bias: 0.0,
        };

        let mut cal = ChaCha8Rng::seed_from_u64(seed);
        cal.set_stream(3);
        let proj: Vec<f64> = (0..CALIBRATION_DRAWS)
            .map(|_| {
                let x = model.sample(&mut cal, &vec![0.0; d], 1.0);
                model.project(&x)
            })
            .collect();
        let mean = proj.iter().sum::<f64>() / proj.len() as f64;
        let sd = (proj.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / proj.len() as f64).sqrt();
        model.slope = sharpness / sd;

        let rate = |b: f64| {
            proj.iter().map(|&p| sigmoid(model.slope * p + b)).sum::<f64>() / proj.len() as f64
        };
        let (mut lo, mut hi) = (-100.0, 100.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if rate(mid) < positive_rate {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        model.bias = 0.5 * (lo + hi);
        model
    }

    fn project(&self, x: &[f64]) -> f64 {
        x.iter().zip(&self.direction).map(|(a, b)| a * b).sum()
    }

    /// Positive-class probability under the labeling rule.
    pub fn probability(&self, x: &[f64]) -> f64 {
        sigmoid(self.slope * self.project(x) + self.bias)
    }

    fn sample(&self, rng: &mut ChaCha8Rng, shift: &[f64], cov_scale: f64) -> Vec<f64> {
        let comp = rng.random_bool(0.5) as usize;
        let z: [f64; RANK] = std::array::from_fn(|_| normal(rng));
        let scale = cov_scale.sqrt();
        (0..self.d)
            .map(|i| {
                let low_rank: f64 = (0..RANK).map(|r| self.loadings[i * RANK + r] * z[r]).sum();
                let dev = low_rank + NOISE_SD * normal(rng);
                self.means[comp][i] + shift[i] + scale * dev
            })
            .collect()
    }
}

fn feature_names(d: usize) -> Vec<String> {
    let width = (d.max(2) - 1).to_string().len().max(2);
    (0..d).map(|i| format!("x{i:0width$}")).collect()
}

fn to_table(d: usize, rows: &[Vec<f64>]) -> Result<Table> {
    let columns = feature_names(d).into_iter().map(ColumnMeta::continuous).collect();
    Table::new(columns, rows.len(), rows.concat(), vec![false; rows.len() * d])
}

/// The base model a scenario induces; useful as a Bayes-optimal reference scorer.
pub fn base_model(scenario: &ShiftScenario) -> Result<BaseModel> {
    scenario.validate()?;
    Ok(BaseModel::new(
        scenario.d,
        scenario.label_sharpness,
        scenario.positive_rate,
        scenario.seed,
    ))
}

pub fn generate(scenario: &ShiftScenario) -> Result<SynthData> {
    let model = base_model(scenario)?;
    let d = scenario.d;
    let zero = vec![0.0; d];

    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
    rng.set_stream(1);
    let mut train_rows = Vec::with_capacity(scenario.n_train);
    let mut train_labels = Vec::with_capacity(scenario.n_train);
    for _ in 0..scenario.n_train {
        let x = model.sample(&mut rng, &zero, 1.0);
        train_labels.push(rng.random_bool(model.probability(&x)));
        train_rows.push(x);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
    rng.set_stream(2);
    let ood_mask: Vec<bool> = match scenario.ood_count {
        OodCount::Exact => {
            let k = (scenario.ood_fraction * scenario.n_test as f64).round() as usize;
            let mut mask = vec![false; scenario.n_test];
            for i in rand::seq::index::sample(&mut rng, scenario.n_test, k) {
                mask[i] = true;
            }
            mask
        }
        OodCount::Binomial => (0..scenario.n_test)
            .map(|_| rng.random_bool(scenario.ood_fraction))
            .collect(),
    };
    let mut test_rows = Vec::with_capacity(scenario.n_test);
    let mut test_labels = Vec::with_capacity(scenario.n_test);
    for &ood in &ood_mask {
        let x = if ood {
            model.sample(&mut rng, &scenario.mean_shift, scenario.cov_scale)
        } else {
            model.sample(&mut rng, &zero, 1.0)
        };
        let mut y = rng.random_bool(model.probability(&x));
        if ood && rng.random_bool(scenario.label_noise_ood) {
            y = !y;
        }
        test_labels.push(y);
        test_rows.push(x);
    }

    Ok(SynthData {
        train: to_table(d, &train_rows)?,
        train_labels,
        test: to_table(d, &test_rows)?,
        test_labels,
        ood_mask,
    })
}
