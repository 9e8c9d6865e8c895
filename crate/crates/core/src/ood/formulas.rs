use crate::error::{Error, Result};

/// Numerically stable natural-log `log Σ e^{v}`.
pub fn logsumexp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// `Σ (x_l − x̂_l)²`.
pub fn reconstruction_loss(x: &[f64], x_hat: &[f64]) -> Result<f64> {
    if x.len() != x_hat.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: x_hat.len(),
        });
    }
    Ok(x.iter().zip(x_hat).map(|(a, b)| (a - b).powi(2)).sum())
}

fn check_members(probs: &[f64]) -> Result<()> {
    if probs.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "ensemble scores need at least 2 members, got {}",
            probs.len()
        )));
    }
    Ok(())
}

/// Population standard deviation of member positive-class probabilities.
pub fn ensemble_std(probs: &[f64]) -> Result<f64> {
    check_members(probs)?;
    let m = probs.len() as f64;
    let mean = probs.iter().sum::<f64>() / m;
    Ok((probs.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / m).sqrt())
}

/// Base-2 entropy of the two-class distribution `(1 − p, p)`.
pub fn binary_entropy_bits(p: f64) -> f64 {
    let term = |q: f64| if q > 0.0 { -q * q.log2() } else { 0.0 };
    term(p) + term(1.0 - p)
}

/// Mutual information `H(mean p) − mean H(p_i)` in bits.
pub fn ensemble_epistemic(probs: &[f64]) -> Result<f64> {
    check_members(probs)?;
    let m = probs.len() as f64;
    let mean = probs.iter().sum::<f64>() / m;
    let total = binary_entropy_bits(mean);
    let aleatoric = probs.iter().map(|&p| binary_entropy_bits(p)).sum::<f64>() / m;
    Ok((total - aleatoric).max(0.0))
}

/// `−T · log Σ e^{f_j / T}`.
pub fn energy(logits: &[f64], temperature: f64) -> Result<f64> {
    if !(temperature > 0.0 && temperature.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "temperature must be > 0, got {temperature}"
        )));
    }
    if logits.is_empty() || logits.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("energy logits".into()));
    }
    let scaled: Vec<f64> = logits.iter().map(|f| f / temperature).collect();
    Ok(-temperature * logsumexp(&scaled))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}");
    }

    #[test]
    fn reconstruction_examples() {
        assert_eq!(reconstruction_loss(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(reconstruction_loss(&[1.0, 0.0], &[0.0, 0.0]).unwrap(), 1.0);
        assert_eq!(reconstruction_loss(&[3.0, 4.0], &[0.0, 0.0]).unwrap(), 25.0);
        assert!(reconstruction_loss(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn ensemble_std_examples() {
        assert_eq!(ensemble_std(&[0.5; 5]).unwrap(), 0.0);
        close(ensemble_std(&[0.2, 0.8]).unwrap(), 0.3, 1e-12);
        assert_eq!(ensemble_std(&[0.0, 1.0]).unwrap(), 0.5);
        assert!(ensemble_std(&[0.3]).is_err());
    }

    #[test]
    fn epistemic_examples() {
        assert_eq!(ensemble_epistemic(&[0.3, 0.3, 0.3]).unwrap(), 0.0);
        assert_eq!(ensemble_epistemic(&[1.0, 0.0]).unwrap(), 1.0);
        assert_eq!(ensemble_epistemic(&[0.5, 0.5]).unwrap(), 0.0);
        assert_eq!(binary_entropy_bits(0.5), 1.0);
        assert!(ensemble_epistemic(&[0.1]).is_err());
    }

    #[test]
    fn energy_examples() {
        close(energy(&[0.0, 0.0], 1.0).unwrap(), -std::f64::consts::LN_2, 1e-12);
        close(energy(&[3.0, 1.0], 1.0).unwrap(), -(3.0 + (1.0 + (-2f64).exp()).ln()), 1e-12);
        close(energy(&[3.0, 1.0], 1.0).unwrap(), -3.126928, 1e-6);
        close(energy(&[10.0, -10.0], 1.0).unwrap(), -10.0, 1e-8);
        assert!(energy(&[1.0, f64::NAN], 1.0).is_err());
        assert!(energy(&[1.0, 2.0], 0.0).is_err());
    }

    #[test]
    fn energy_cold_limit_is_negative_max_logit() {
        for logits in [[0.3f64, -1.2], [2.0, 2.5], [-4.0, -4.0]] {
            let max = logits[0].max(logits[1]);
            close(energy(&logits, 1e-3).unwrap(), -max, 1e-2);
        }
    }

    #[test]
    fn logsumexp_shifts_with_constant() {
        let f = [0.7, -2.3, 1.9];
        let c = 123.25;
        let shifted: Vec<f64> = f.iter().map(|v| v + c).collect();
        close(logsumexp(&shifted), logsumexp(&f) + c, 1e-10);
    }
}
