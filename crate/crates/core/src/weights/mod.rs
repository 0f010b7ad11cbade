//! Weights on the mid-range, mid-quartile range and median.
//!
//! Every mean estimator in this crate is a convex combination
//! `w1 (a+b)/2 + w2 (q1+q3)/2 + (1 − w1 − w2) m`; a [`WeightSet`] pins down
//! `w1` and `w2` for one scenario and sample size.

mod fit;

pub use fit::{fit_power_law, FitCoefficients, FitModel};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::order_stats::{asymptotic_cov, Aggregates, OrderStatMoments};
use crate::summary::Scenario;

const WEIGHT_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightSource {
    /// MSE-optimal under normality, from order-statistic moments.
    Exact,
    /// Closed-form approximation in `n`.
    Approx,
    /// Weights implied by a pre-existing estimator.
    Legacy,
    /// Supplied by the caller.
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightSet {
    pub scenario: Scenario,
    pub n: usize,
    pub source: WeightSource,
    /// Weight on `(a+b)/2`; zero for S2.
    pub mid_range: f64,
    /// Weight on `(q1+q3)/2`; zero for S1.
    pub mid_quartile: f64,
}

impl WeightSet {
    /// A single-weight set: on the mid-range for S1, on the mid-quartile
    /// range for S2.
    pub fn single(scenario: Scenario, w: f64, n: usize, source: WeightSource) -> Result<Self> {
        match scenario {
            Scenario::S1 => Self::new(scenario, w, 0.0, n, source),
            Scenario::S2 => Self::new(scenario, 0.0, w, n, source),
            Scenario::S3 => Err(Error::ScenarioShape(
                "scenario s3 needs two weights".into(),
            )),
        }
    }

    pub fn s3(w1: f64, w2: f64, n: usize, source: WeightSource) -> Result<Self> {
        Self::new(Scenario::S3, w1, w2, n, source)
    }

    fn new(scenario: Scenario, mid_range: f64, mid_quartile: f64, n: usize, source: WeightSource) -> Result<Self> {
        let in_unit = |w: f64| w.is_finite() && (-WEIGHT_SLACK..=1.0 + WEIGHT_SLACK).contains(&w);
        if !in_unit(mid_range) || !in_unit(mid_quartile) || !in_unit(mid_range + mid_quartile) {
            let msg = format!(
                "weights ({mid_range}, {mid_quartile}) for {scenario} must lie in [0, 1] with sum <= 1"
            );
            return Err(match source {
                WeightSource::Exact => Error::InternalConsistency(msg),
                _ => Error::Domain(msg),
            });
        }
        Ok(WeightSet {
            scenario,
            n,
            source,
            mid_range,
            mid_quartile,
        })
    }

    /// The implied weight on the median.
    pub fn median(&self) -> f64 {
        1.0 - self.mid_range - self.mid_quartile
    }

    /// The one free weight of an S1/S2 set.
    pub fn primary(&self) -> f64 {
        match self.scenario {
            Scenario::S2 => self.mid_quartile,
            _ => self.mid_range,
        }
    }
}

/// `MSE(w) = w²/4 Var(a+b) + (1−w)² Var(m) + w(1−w) Cov(a+b, m)`.
pub fn mse_s1(agg: &Aggregates, w: f64) -> f64 {
    mse_single(agg.var_extremes, agg.var_median, agg.cov_extremes_median, w)
}

/// As [`mse_s1`] with `q1+q3` in place of `a+b`.
pub fn mse_s2(agg: &Aggregates, w: f64) -> f64 {
    mse_single(agg.var_quartiles, agg.var_median, agg.cov_quartiles_median, w)
}

fn mse_single(var_pair: f64, var_median: f64, cov: f64, w: f64) -> f64 {
    w * w / 4.0 * var_pair + (1.0 - w) * (1.0 - w) * var_median + w * (1.0 - w) * cov
}

pub fn mse_s3(agg: &Aggregates, w1: f64, w2: f64) -> f64 {
    let wm = 1.0 - w1 - w2;
    w1 * w1 / 4.0 * agg.var_extremes
        + w2 * w2 / 4.0 * agg.var_quartiles
        + wm * wm * agg.var_median
        + w1 * w2 / 2.0 * agg.cov_extremes_quartiles
        + w1 * wm * agg.cov_extremes_median
        + w2 * wm * agg.cov_quartiles_median
}

/// Minimiser of [`mse_single`]: `(4 Var(m) − 2 Cov) / (Var(pair) + 4 Var(m) − 4 Cov)`.
fn optimal_single(var_pair: f64, var_median: f64, cov: f64, n: usize) -> Result<f64> {
    let num = 4.0 * var_median - 2.0 * cov;
    let den = var_pair + 4.0 * var_median - 4.0 * cov;
    if !(den > 0.0) {
        return Err(Error::InternalConsistency(format!(
            "optimal-weight denominator {den:e} is not positive for n = {n}"
        )));
    }
    Ok(num / den)
}

/// MSE-optimal weight on the mid-range for `{a, m, b; n}`.
pub fn optimal_weight_s1(moments: &OrderStatMoments) -> Result<WeightSet> {
    let agg = moments.aggregates();
    let w = optimal_single(agg.var_extremes, agg.var_median, agg.cov_extremes_median, moments.n)?;
    WeightSet::single(Scenario::S1, w, moments.n, WeightSource::Exact)
}

/// MSE-optimal weight on the mid-quartile range for `{q1, m, q3; n}`.
pub fn optimal_weight_s2(moments: &OrderStatMoments) -> Result<WeightSet> {
    let agg = moments.aggregates();
    let w = optimal_single(agg.var_quartiles, agg.var_median, agg.cov_quartiles_median, moments.n)?;
    WeightSet::single(Scenario::S2, w, moments.n, WeightSource::Exact)
}

/// Normal equations of the S3 MSE: `M (w1, w2)ᵀ = rhs`.
pub fn s3_system(agg: &Aggregates) -> ([[f64; 2]; 2], [f64; 2]) {
    let Aggregates {
        var_extremes: a,
        var_quartiles: b,
        var_median: c,
        cov_extremes_quartiles: d,
        cov_extremes_median: e,
        cov_quartiles_median: f,
    } = *agg;
    let off = 4.0 * c + d - 2.0 * e - 2.0 * f;
    (
        [[a + 4.0 * c - 4.0 * e, off], [off, b + 4.0 * c - 4.0 * f]],
        [4.0 * c - 2.0 * e, 4.0 * c - 2.0 * f],
    )
}

/// MSE-optimal `(w1, w2)` for the full five-number summary.
///
/// The 2×2 normal-equation matrix must be positive definite; otherwise the
/// moments are inconsistent and an error is returned.
pub fn optimal_weights_s3(moments: &OrderStatMoments) -> Result<WeightSet> {
    let (m, rhs) = s3_system(&moments.aggregates());
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let scale = m[0][0].abs().max(m[1][1].abs());
    if !(m[0][0] > 0.0) || !(det > 1e-14 * scale * scale) || m[0][1] != m[1][0] {
        return Err(Error::InternalConsistency(format!(
            "S3 weight system is not positive definite for n = {} (det {det:e})",
            moments.n
        )));
    }
    let w1 = (rhs[0] * m[1][1] - m[0][1] * rhs[1]) / det;
    let w2 = (m[0][0] * rhs[1] - m[1][0] * rhs[0]) / det;
    WeightSet::s3(w1, w2, moments.n, WeightSource::Exact)
}

/// Exact optimal weights for any scenario.
pub fn optimal_weights(scenario: Scenario, moments: &OrderStatMoments) -> Result<WeightSet> {
    match scenario {
        Scenario::S1 => optimal_weight_s1(moments),
        Scenario::S2 => optimal_weight_s2(moments),
        Scenario::S3 => optimal_weights_s3(moments),
    }
}

/// Large-`n` limit of the S2 optimal weight, from the asymptotic covariances
/// of the sample quartiles and median.
pub fn asymptotic_weight_s2() -> f64 {
    let cov = |a: f64, b: f64| {
        asymptotic_cov(a, b, 1)
            .expect("fixed quantile levels are valid")
            .value
    };
    let var_quartiles = cov(0.25, 0.25) + cov(0.75, 0.75) + 2.0 * cov(0.25, 0.75);
    let var_median = cov(0.5, 0.5);
    let cov_qm = cov(0.25, 0.5) + cov(0.5, 0.75);
    (4.0 * var_median - 2.0 * cov_qm) / (var_quartiles + 4.0 * var_median - 4.0 * cov_qm)
}

/// Smallest `n` the closed-form approximations were fitted for.
pub const MIN_APPROX_N: usize = 5;

/// Closed-form weights: `4/(4+n^0.75)` (S1), `0.7 + 0.39/n` (S2),
/// `(2.2/(2.2+n^0.75), 0.7 − 0.72/n^0.55)` (S3). Any `n >= 5`.
pub fn approx_weight(scenario: Scenario, n: usize) -> Result<WeightSet> {
    if n < MIN_APPROX_N {
        return Err(Error::Domain(format!(
            "approximate weights are defined for n >= {MIN_APPROX_N}, got {n}"
        )));
    }
    let nf = n as f64;
    match scenario {
        Scenario::S1 => WeightSet::single(scenario, 4.0 / (4.0 + nf.powf(0.75)), n, WeightSource::Approx),
        Scenario::S2 => WeightSet::single(scenario, 0.7 + 0.39 / nf, n, WeightSource::Approx),
        Scenario::S3 => WeightSet::s3(
            2.2 / (2.2 + nf.powf(0.75)),
            0.7 - 0.72 / nf.powf(0.55),
            n,
            WeightSource::Approx,
        ),
    }
}

/// `(a + 2m + b)/4` for `n <= 25`, the median otherwise.
pub fn hozo_weight(n: usize) -> WeightSet {
    let w = if n <= 25 { 0.5 } else { 0.0 };
    WeightSet {
        scenario: Scenario::S1,
        n,
        source: WeightSource::Legacy,
        mid_range: w,
        mid_quartile: 0.0,
    }
}

/// `(a + 2m + b)/4` regardless of `n`.
pub fn hozo_unconditional_weight(n: usize) -> WeightSet {
    WeightSet {
        mid_range: 0.5,
        ..hozo_weight(n)
    }
}

/// Equal weights on `q1`, `m`, `q3`.
pub fn wan_weight(n: usize) -> WeightSet {
    WeightSet {
        scenario: Scenario::S2,
        n,
        source: WeightSource::Legacy,
        mid_range: 0.0,
        mid_quartile: 2.0 / 3.0,
    }
}

/// `(a + 2q1 + 2m + 2q3 + b)/8`.
pub fn bland_weights(n: usize) -> WeightSet {
    WeightSet {
        scenario: Scenario::S3,
        n,
        source: WeightSource::Legacy,
        mid_range: 0.25,
        mid_quartile: 0.5,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn approx_examples() {
        let s1 = approx_weight(Scenario::S1, 25).unwrap();
        assert!((s1.primary() - 0.263_498_711_467_851).abs() < 1e-12);
        let s2 = approx_weight(Scenario::S2, 5).unwrap();
        assert!((s2.primary() - 0.778).abs() < 1e-12);
        let s3 = approx_weight(Scenario::S3, 5).unwrap();
        assert!((s3.mid_range - 0.396_846_762_064_230).abs() < 1e-12);
        assert!((s3.mid_quartile - 0.402_902_502_253_966).abs() < 1e-12);
        assert!(matches!(approx_weight(Scenario::S1, 4), Err(Error::Domain(_))));
        // Any n >= 5, not only 4Q + 1.
        assert!(approx_weight(Scenario::S3, 40).is_ok());
    }

    #[test]
    fn asymptotic_s2_limit() {
        assert!((asymptotic_weight_s2() - 0.699).abs() < 1e-3);
    }

    #[test]
    fn legacy_weights() {
        assert_eq!(hozo_weight(25).mid_range, 0.5);
        assert_eq!(hozo_weight(26).mid_range, 0.0);
        assert_eq!(hozo_unconditional_weight(40).mid_range, 0.5);
        assert_eq!(hozo_unconditional_weight(40).n, 40);
        assert_eq!(wan_weight(9).median(), 1.0 - 2.0 / 3.0);
        assert_eq!(bland_weights(9).median(), 0.25);
    }

    #[test]
    fn weight_set_validation() {
        assert!(WeightSet::single(Scenario::S1, 1.2, 9, WeightSource::Custom).is_err());
        assert!(WeightSet::s3(0.6, 0.5, 9, WeightSource::Custom).is_err());
        assert!(WeightSet::single(Scenario::S3, 0.5, 9, WeightSource::Custom).is_err());
        assert!(WeightSet::s3(0.4, 0.6, 9, WeightSource::Custom).is_ok());
        let err = WeightSet::s3(-0.1, 0.5, 9, WeightSource::Exact).unwrap_err();
        assert!(err.is_numerical());
    }
}
