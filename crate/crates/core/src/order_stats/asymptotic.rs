use serde::{Deserialize, Serialize};

use super::normal::{pdf, quantile};
use crate::error::{Error, Result};

/// Large-sample covariance of two sample quantiles of a standard normal sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticQuantileCov {
    pub p_i: f64,
    pub p_j: f64,
    pub n: usize,
    pub value: f64,
}

impl AsymptoticQuantileCov {
    /// `n · value`, which does not depend on `n`.
    pub fn scaled(&self) -> f64 {
        self.value * self.n as f64
    }
}

/// `p_i (1 − p_j) / (n φ(Φ⁻¹(p_i)) φ(Φ⁻¹(p_j)))` for `0 < p_i <= p_j < 1`.
pub fn asymptotic_cov(p_i: f64, p_j: f64, n: usize) -> Result<AsymptoticQuantileCov> {
    if !(p_i > 0.0 && p_j < 1.0 && p_i <= p_j) {
        return Err(Error::Domain(format!(
            "quantile levels must satisfy 0 < p_i <= p_j < 1, got ({p_i}, {p_j})"
        )));
    }
    if n == 0 {
        return Err(Error::Domain("sample size must be positive".into()));
    }
    let zi = quantile(p_i)?;
    let zj = quantile(p_j)?;
    let value = p_i * (1.0 - p_j) / (n as f64 * pdf(zi) * pdf(zj));
    Ok(AsymptoticQuantileCov { p_i, p_j, n, value })
}
