//! Logit-based confidence scores.

use crate::{CoreError, Result};

fn check_logits(logits: &[f32]) -> Result<f64> {
    if logits.len() < 2 {
        return Err(CoreError::LogitsRequired(logits.len()));
    }
    if logits.iter().any(|v| !v.is_finite()) {
        return Err(CoreError::NonFinite("logits"));
    }
    Ok(logits
        .iter()
        .fold(f64::NEG_INFINITY, |m, &v| m.max(f64::from(v))))
}

/// Maximum softmax probability, computed with the max logit subtracted.
///
/// The largest probability is `1 / sum(exp(f_i - f_max))`.
pub fn score_msp(logits: &[f32]) -> Result<f64> {
    let max = check_logits(logits)?;
    let denom: f64 = logits.iter().map(|&v| libm::exp(f64::from(v) - max)).sum();
    Ok(1.0 / denom)
}

/// Negative free energy, `T * log(sum(exp(f_i / T)))`, via max-shifted log-sum-exp.
pub fn score_energy(logits: &[f32], temperature: f64) -> Result<f64> {
    if !(temperature > 0.0 && temperature.is_finite()) {
        return Err(CoreError::InvalidTemperature(temperature));
    }
    let max = check_logits(logits)? / temperature;
    let sum: f64 = logits
        .iter()
        .map(|&v| libm::exp(f64::from(v) / temperature - max))
        .sum();
    Ok(temperature * (max + libm::log(sum)))
}
