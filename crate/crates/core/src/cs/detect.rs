//! Activity detection on the recovered matrix.

use ndarray::{Array2, ArrayView1};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{config_err, Error, Result};

/// Maximum-ratio-combined row statistic `sum_i eta_i |x_i|` with
/// `eta_i = |x_i| / ||x||`.
pub fn mrc_statistic(row: ArrayView1<'_, Complex64>) -> f64 {
    let norm = row_norm(row);
    if norm == 0.0 {
        return 0.0;
    }
    row.iter().map(|z| (z.norm() / norm) * z.norm()).sum()
}

pub fn row_norm(row: ArrayView1<'_, Complex64>) -> f64 {
    row.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Indices whose row statistic reaches `eps`, ascending.
pub fn detect_active(x_hat: &Array2<Complex64>, eps: f64) -> Result<Vec<u32>> {
    if !(eps > 0.0) {
        return Err(Error::Domain(format!("detection threshold {eps} must be positive")));
    }
    Ok(x_hat
        .rows()
        .into_iter()
        .enumerate()
        .filter(|(_, r)| row_norm(*r) >= eps)
        .map(|(i, _)| i as u32)
        .collect())
}

/// How the detection threshold is chosen for a slot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum EpsilonRule {
    Fixed(f64),
    /// `factor * sqrt(sum_c tau2_c)`: the norm of a pure-noise row of the
    /// AMP pseudo-observation.
    NoiseScaled(f64),
    /// `factor *` median row norm of the rows below a noise-scaled first pass.
    MedianInactive(f64),
}

impl Default for EpsilonRule {
    fn default() -> Self {
        EpsilonRule::NoiseScaled(1.0)
    }
}

impl EpsilonRule {
    pub fn validate(&self) -> Result<()> {
        let v = match *self {
            EpsilonRule::Fixed(v) | EpsilonRule::NoiseScaled(v) | EpsilonRule::MedianInactive(v) => v,
        };
        if !(v > 0.0 && v.is_finite()) {
            return Err(config_err(format!(
                "detection threshold parameter {v} must be positive"
            )));
        }
        Ok(())
    }

    /// Threshold for a recovered matrix with per-column effective noise `tau2`.
    pub fn resolve(&self, x_hat: &Array2<Complex64>, tau2: &[f64]) -> f64 {
        let noise_norm = tau2.iter().sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
        match *self {
            EpsilonRule::Fixed(v) => v,
            EpsilonRule::NoiseScaled(k) => k * noise_norm,
            EpsilonRule::MedianInactive(k) => {
                let mut quiet: Vec<f64> = x_hat
                    .rows()
                    .into_iter()
                    .map(row_norm)
                    .filter(|&v| v < noise_norm)
                    .collect();
                if quiet.is_empty() {
                    return noise_norm;
                }
                quiet.sort_by(f64::total_cmp);
                (k * quiet[quiet.len() / 2]).max(f64::MIN_POSITIVE)
            }
        }
    }
}
