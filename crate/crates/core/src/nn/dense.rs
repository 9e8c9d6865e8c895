use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Fully connected layer `y = x W + b` with `W` stored `inputs × outputs`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "DenseRepr", try_from = "DenseRepr")]
pub struct Dense {
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

#[derive(Serialize, Deserialize)]
struct DenseRepr {
    rows: usize,
    cols: usize,
    weights: Vec<f64>,
    bias: Vec<f64>,
}

impl From<Dense> for DenseRepr {
    fn from(d: Dense) -> Self {
        DenseRepr {
            rows: d.w.nrows(),
            cols: d.w.ncols(),
            weights: d.w.iter().copied().collect(),
            bias: d.b.to_vec(),
        }
    }
}

impl TryFrom<DenseRepr> for Dense {
    type Error = String;

    fn try_from(r: DenseRepr) -> Result<Self, String> {
        if r.bias.len() != r.cols {
            return Err(format!("bias has {} entries for {} outputs", r.bias.len(), r.cols));
        }
        if r.weights.iter().chain(&r.bias).any(|v| !v.is_finite()) {
            return Err("non-finite parameter".into());
        }
        let w = Array2::from_shape_vec((r.rows, r.cols), r.weights).map_err(|e| e.to_string())?;
        Ok(Dense {
            w,
            b: Array1::from(r.bias),
        })
    }
}

impl Dense {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Dense {
            w: Array2::zeros((inputs, outputs)),
            b: Array1::zeros(outputs),
        }
    }

    /// He-uniform weights, zero bias.
    pub fn he_uniform(inputs: usize, outputs: usize, rng: &mut impl Rng) -> Self {
        let limit = (6.0 / inputs as f64).sqrt();
        Dense {
            w: Array2::from_shape_simple_fn((inputs, outputs), || rng.random_range(-limit..limit)),
            b: Array1::zeros(outputs),
        }
    }

    pub fn inputs(&self) -> usize {
        self.w.nrows()
    }

    pub fn outputs(&self) -> usize {
        self.w.ncols()
    }

    pub fn forward(&self, x: ArrayView2<f64>) -> Array2<f64> {
        x.dot(&self.w) + &self.b
    }

    /// Parameter gradients and the gradient with respect to the input.
    pub fn backward(&self, x: ArrayView2<f64>, dy: ArrayView2<f64>) -> (Dense, Array2<f64>) {
        let grad = Dense {
            w: x.t().dot(&dy),
            b: dy.sum_axis(Axis(0)),
        };
        (grad, dy.dot(&self.w.t()))
    }

    pub(crate) fn tensors(&self) -> [&[f64]; 2] {
        [
            self.w.as_slice().expect("standard layout"),
            self.b.as_slice().expect("standard layout"),
        ]
    }

    pub(crate) fn tensors_mut(&mut self) -> [&mut [f64]; 2] {
        [
            self.w.as_slice_mut().expect("standard layout"),
            self.b.as_slice_mut().expect("standard layout"),
        ]
    }

    pub(crate) fn is_finite(&self) -> bool {
        self.w.iter().chain(self.b.iter()).all(|v| v.is_finite())
    }
}

pub(crate) fn relu(z: &Array2<f64>) -> Array2<f64> {
    z.mapv(|v| v.max(0.0))
}

/// `dy ⊙ 1[z > 0]`.
pub(crate) fn relu_backward(z: &Array2<f64>, mut dy: Array2<f64>) -> Array2<f64> {
    dy.zip_mut_with(z, |d, &z| {
        if z <= 0.0 {
            *d = 0.0;
        }
    });
    dy
}
