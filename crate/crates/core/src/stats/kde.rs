use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Gaussian kernel density evaluated on an evenly spaced grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KdeCurve {
    pub grid: Vec<f64>,
    pub density: Vec<f64>,
    pub bandwidth: f64,
}

impl KdeCurve {
    /// Trapezoidal integral of the density over the grid.
    pub fn integral(&self) -> f64 {
        self.grid
            .windows(2)
            .zip(self.density.windows(2))
            .map(|(x, y)| (x[1] - x[0]) * (y[0] + y[1]) / 2.0)
            .sum()
    }
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Silverman's rule: `0.9 * min(std, IQR / 1.34) * n^(-1/5)`. Falls back to
/// the std alone when the IQR is zero.
pub fn silverman_bandwidth(sample: &[f64]) -> f64 {
    let n = sample.len() as f64;
    let mean = sample.iter().sum::<f64>() / n;
    let sd = (sample.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let iqr = quantile(&sorted, 0.75) - quantile(&sorted, 0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    0.9 * spread * n.powf(-0.2)
}

pub fn kde(sample: &[f64], grid_size: usize) -> Result<KdeCurve> {
    if grid_size < 2 {
        return Err(Error::InvalidArgument("grid_size must be >= 2".into()));
    }
    if sample.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("kde sample".into()));
    }
    let (lo, hi) = sample
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if sample.len() < 2 || lo == hi {
        return Err(Error::InvalidArgument(
            "kde needs at least two distinct values".into(),
        ));
    }
    let h = silverman_bandwidth(sample);
    let (start, end) = (lo - 4.0 * h, hi + 4.0 * h);
    let step = (end - start) / (grid_size - 1) as f64;
    let grid: Vec<f64> = (0..grid_size).map(|i| start + step * i as f64).collect();
    let norm = 1.0 / (sample.len() as f64 * h * (2.0 * std::f64::consts::PI).sqrt());
    let density = grid
        .iter()
        .map(|&x| {
            norm * sample
                .iter()
                .map(|&s| (-0.5 * ((x - s) / h).powi(2)).exp())
                .sum::<f64>()
        })
        .collect();
    Ok(KdeCurve {
        grid,
        density,
        bandwidth: h,
    })
}
