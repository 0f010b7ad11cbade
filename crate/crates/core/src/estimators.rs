//! Sample-mean and standard-deviation estimators for summary fragments.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::order_stats::{normal_quantile, OrderStatMoments};
use crate::summary::{FiveNumberSummary, Scenario};
use crate::weights::{approx_weight, optimal_weights, WeightSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Hozo,
    HozoAsApplied,
    WanMean,
    Bland,
    OptimalApprox,
    OptimalExact,
    CustomWeight,
    WanSd,
    HozoSd,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Hozo => "hozo",
            Method::HozoAsApplied => "hozo_as_applied",
            Method::WanMean => "wan_mean",
            Method::Bland => "bland",
            Method::OptimalApprox => "optimal_approx",
            Method::OptimalExact => "optimal_exact",
            Method::CustomWeight => "custom_weight",
            Method::WanSd => "wan_sd",
            Method::HozoSd => "hozo_sd",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub method: Method,
    pub weights: Option<WeightSet>,
}

/// Branching of the `(a + 2m + b)/4` rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HozoMode {
    /// `(a + 2m + b)/4` for `n <= 25`, `m` above.
    Thresholded,
    /// `(a + 2m + b)/4` for every `n`.
    Unconditional,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SdMethod {
    Wan,
    Hozo,
}

impl SdMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            SdMethod::Wan => "wan",
            SdMethod::Hozo => "hozo",
        }
    }
}

impl FromStr for SdMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "wan" => Ok(SdMethod::Wan),
            "hozo" => Ok(SdMethod::Hozo),
            other => Err(Error::InvalidInput(format!("unknown SD method {other:?}"))),
        }
    }
}

/// Where the optimal weights come from.
#[derive(Debug, Clone, Copy)]
pub enum WeightChoice<'a> {
    Approx,
    Exact(&'a OrderStatMoments),
}

fn require(s: &FiveNumberSummary, scenario: Scenario) -> Result<()> {
    if s.scenario == scenario {
        Ok(())
    } else {
        Err(Error::ScenarioShape(format!(
            "estimator needs a {scenario} summary, got {}",
            s.scenario
        )))
    }
}

fn extremes(s: &FiveNumberSummary) -> Result<(f64, f64)> {
    match (s.min, s.max) {
        (Some(a), Some(b)) => Ok((a, b)),
        _ => Err(Error::ScenarioShape("minimum and maximum required".into())),
    }
}

fn quartiles(s: &FiveNumberSummary) -> Result<(f64, f64)> {
    match (s.q1, s.q3) {
        (Some(q1), Some(q3)) => Ok((q1, q3)),
        _ => Err(Error::ScenarioShape("first and third quartiles required".into())),
    }
}

pub fn mean_hozo(s: &FiveNumberSummary, mode: HozoMode) -> Result<Estimate> {
    require(s, Scenario::S1)?;
    let (a, b) = extremes(s)?;
    let m = s.median;
    let (value, method) = match mode {
        HozoMode::Thresholded if s.n > 25 => (m, Method::Hozo),
        HozoMode::Thresholded => ((a + 2.0 * m + b) / 4.0, Method::Hozo),
        HozoMode::Unconditional => ((a + 2.0 * m + b) / 4.0, Method::HozoAsApplied),
    };
    Ok(Estimate {
        value,
        method,
        weights: None,
    })
}

/// `(q1 + m + q3)/3`.
pub fn mean_wan_s2(s: &FiveNumberSummary) -> Result<Estimate> {
    require(s, Scenario::S2)?;
    let (q1, q3) = quartiles(s)?;
    Ok(Estimate {
        value: (q1 + s.median + q3) / 3.0,
        method: Method::WanMean,
        weights: None,
    })
}

/// `(a + 2q1 + 2m + 2q3 + b)/8`.
pub fn mean_bland(s: &FiveNumberSummary) -> Result<Estimate> {
    require(s, Scenario::S3)?;
    let (a, b) = extremes(s)?;
    let (q1, q3) = quartiles(s)?;
    Ok(Estimate {
        value: (a + 2.0 * q1 + 2.0 * s.median + 2.0 * q3 + b) / 8.0,
        method: Method::Bland,
        weights: None,
    })
}

/// `w1 (a+b)/2 + w2 (q1+q3)/2 + (1 − w1 − w2) m` with the terms the
/// scenario does not report dropped.
pub fn mean_weighted(s: &FiveNumberSummary, w: &WeightSet) -> Result<Estimate> {
    if w.scenario != s.scenario {
        return Err(Error::ScenarioShape(format!(
            "weights for {} applied to a {} summary",
            w.scenario, s.scenario
        )));
    }
    let value = match s.scenario {
        Scenario::S1 => {
            let (a, b) = extremes(s)?;
            w.mid_range * ((a + b) / 2.0) + (1.0 - w.mid_range) * s.median
        }
        Scenario::S2 => {
            let (q1, q3) = quartiles(s)?;
            w.mid_quartile * ((q1 + q3) / 2.0) + (1.0 - w.mid_quartile) * s.median
        }
        Scenario::S3 => {
            let (a, b) = extremes(s)?;
            let (q1, q3) = quartiles(s)?;
            w.mid_range * ((a + b) / 2.0) + w.mid_quartile * ((q1 + q3) / 2.0) + w.median() * s.median
        }
    };
    let method = match w.source {
        crate::weights::WeightSource::Exact => Method::OptimalExact,
        crate::weights::WeightSource::Approx => Method::OptimalApprox,
        _ => Method::CustomWeight,
    };
    Ok(Estimate {
        value,
        method,
        weights: Some(*w),
    })
}

/// The mean estimator with optimal weights for the summary's scenario.
pub fn mean_optimal(s: &FiveNumberSummary, choice: WeightChoice<'_>) -> Result<Estimate> {
    let w = match choice {
        WeightChoice::Approx => approx_weight(s.scenario, s.n)?,
        WeightChoice::Exact(moments) => {
            if moments.n != s.n {
                return Err(Error::InvalidInput(format!(
                    "moments are for n = {}, summary has n = {}",
                    moments.n, s.n
                )));
            }
            optimal_weights(s.scenario, moments)?
        }
    };
    mean_weighted(s, &w)
}

/// `range / (2 Φ⁻¹((n − 0.375)/(n + 0.25)))`.
pub fn sd_wan_range(min: f64, max: f64, n: usize) -> Result<f64> {
    check_sd_inputs(min, max, n)?;
    let nf = n as f64;
    Ok((max - min) / (2.0 * normal_quantile((nf - 0.375) / (nf + 0.25))?))
}

/// `IQR / (2 Φ⁻¹((0.75n − 0.125)/(n + 0.25)))`.
pub fn sd_wan_iqr(q1: f64, q3: f64, n: usize) -> Result<f64> {
    check_sd_inputs(q1, q3, n)?;
    let nf = n as f64;
    Ok((q3 - q1) / (2.0 * normal_quantile((0.75 * nf - 0.125) / (nf + 0.25))?))
}

/// Range rules: `n <= 15` uses `sqrt(((a − 2m + b)²/4 + (b − a)²)/12)`,
/// `15 < n <= 70` uses `range/4`, larger `n` uses `range/6`.
/// The median is only needed for `n <= 15`.
pub fn sd_hozo_range(min: f64, median: Option<f64>, max: f64, n: usize) -> Result<f64> {
    check_sd_inputs(min, max, n)?;
    let range = max - min;
    if n <= 15 {
        let m = median.ok_or_else(|| {
            Error::ScenarioShape(format!("range-based SD for n = {n} <= 15 needs the median"))
        })?;
        let skew = min - 2.0 * m + max;
        Ok(((skew * skew / 4.0 + range * range) / 12.0).sqrt())
    } else if n <= 70 {
        Ok(range / 4.0)
    } else {
        Ok(range / 6.0)
    }
}

fn check_sd_inputs(lo: f64, hi: f64, n: usize) -> Result<()> {
    if n < 5 {
        return Err(Error::InvalidInput(format!("sample size {n} < 5")));
    }
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
        return Err(Error::InvalidInput(format!("bounds ({lo}, {hi}) are not ordered")));
    }
    Ok(())
}

/// Standard deviation from a summary.
///
/// `Wan`: range formula (S1), IQR formula (S2), or their average (S3).
/// `Hozo`: range rules, S1 only.
pub fn sd_estimate(s: &FiveNumberSummary, method: SdMethod) -> Result<Estimate> {
    let value = match method {
        SdMethod::Wan => match s.scenario {
            Scenario::S1 => {
                let (a, b) = extremes(s)?;
                sd_wan_range(a, b, s.n)?
            }
            Scenario::S2 => {
                let (q1, q3) = quartiles(s)?;
                sd_wan_iqr(q1, q3, s.n)?
            }
            Scenario::S3 => {
                let (a, b) = extremes(s)?;
                let (q1, q3) = quartiles(s)?;
                0.5 * (sd_wan_range(a, b, s.n)? + sd_wan_iqr(q1, q3, s.n)?)
            }
        },
        SdMethod::Hozo => {
            require(s, Scenario::S1)?;
            let (a, b) = extremes(s)?;
            sd_hozo_range(a, Some(s.median), b, s.n)?
        }
    };
    Ok(Estimate {
        value,
        method: match method {
            SdMethod::Wan => Method::WanSd,
            SdMethod::Hozo => Method::HozoSd,
        },
        weights: None,
    })
}
