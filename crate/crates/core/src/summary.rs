//! Reported summary fragments of a sample.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which part of the five-number summary a study reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    /// Minimum, median, maximum.
    S1,
    /// First quartile, median, third quartile.
    S2,
    /// All five values.
    S3,
}

impl Scenario {
    pub const ALL: [Scenario; 3] = [Scenario::S1, Scenario::S2, Scenario::S3];

    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::S1 => "s1",
            Scenario::S2 => "s2",
            Scenario::S3 => "s3",
        }
    }

    pub fn has_extremes(self) -> bool {
        matches!(self, Scenario::S1 | Scenario::S3)
    }

    pub fn has_quartiles(self) -> bool {
        matches!(self, Scenario::S2 | Scenario::S3)
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "s1" | "1" => Ok(Scenario::S1),
            "s2" | "2" => Ok(Scenario::S2),
            "s3" | "3" => Ok(Scenario::S3),
            other => Err(Error::InvalidInput(format!("unknown scenario {other:?}"))),
        }
    }
}

/// Returns `Q` for a sample size `n = 4Q + 1`, or a scenario-shape error.
pub fn quarter_index(n: usize) -> Result<usize> {
    if n >= 5 && n % 4 == 1 {
        Ok((n - 1) / 4)
    } else {
        Err(Error::ScenarioShape(format!(
            "sample size {n} is not of the form 4Q+1 with Q >= 1"
        )))
    }
}

/// The 1-based ranks `{1, Q+1, 2Q+1, 3Q+1, n}` of the five summary values.
pub fn summary_ranks(n: usize) -> Result<[usize; 5]> {
    let q = quarter_index(n)?;
    Ok([1, q + 1, 2 * q + 1, 3 * q + 1, n])
}

/// A study's reported summary. Fields not reported under the scenario are `None`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiveNumberSummary {
    pub scenario: Scenario,
    pub n: usize,
    pub min: Option<f64>,
    pub q1: Option<f64>,
    pub median: f64,
    pub q3: Option<f64>,
    pub max: Option<f64>,
}

impl FiveNumberSummary {
    pub fn s1(min: f64, median: f64, max: f64, n: usize) -> Result<Self> {
        Self::new(Scenario::S1, n, Some(min), None, median, None, Some(max))
    }

    pub fn s2(q1: f64, median: f64, q3: f64, n: usize) -> Result<Self> {
        Self::new(Scenario::S2, n, None, Some(q1), median, Some(q3), None)
    }

    pub fn s3(min: f64, q1: f64, median: f64, q3: f64, max: f64, n: usize) -> Result<Self> {
        Self::new(
            Scenario::S3,
            n,
            Some(min),
            Some(q1),
            median,
            Some(q3),
            Some(max),
        )
    }

    /// Builds a summary, checking that exactly the scenario's fields are present,
    /// all are finite and ordered, and `n >= 5`.
    pub fn new(
        scenario: Scenario,
        n: usize,
        min: Option<f64>,
        q1: Option<f64>,
        median: f64,
        q3: Option<f64>,
        max: Option<f64>,
    ) -> Result<Self> {
        if n < 5 {
            return Err(Error::InvalidInput(format!("sample size {n} < 5")));
        }
        let need = |present: bool, field: &str, v: Option<f64>| -> Result<()> {
            match (present, v) {
                (true, None) => Err(Error::ScenarioShape(format!(
                    "scenario {scenario} requires {field}"
                ))),
                (false, Some(_)) => Err(Error::ScenarioShape(format!(
                    "scenario {scenario} does not report {field}"
                ))),
                _ => Ok(()),
            }
        };
        need(scenario.has_extremes(), "min", min)?;
        need(scenario.has_extremes(), "max", max)?;
        need(scenario.has_quartiles(), "q1", q1)?;
        need(scenario.has_quartiles(), "q3", q3)?;

        let s = FiveNumberSummary {
            scenario,
            n,
            min,
            q1,
            median,
            q3,
            max,
        };
        let values = s.present_values();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("summary values must be finite".into()));
        }
        if values.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidInput(format!(
                "summary values are not ordered: {values:?}"
            )));
        }
        Ok(s)
    }

    /// Present values in ascending rank order.
    pub fn present_values(&self) -> Vec<f64> {
        [self.min, self.q1, Some(self.median), self.q3, self.max]
            .into_iter()
            .flatten()
            .collect()
    }

    /// `(a + b) / 2`, when the extremes are reported.
    pub fn mid_range(&self) -> Option<f64> {
        Some((self.min? + self.max?) / 2.0)
    }

    /// `(q1 + q3) / 2`, when the quartiles are reported.
    pub fn mid_quartile(&self) -> Option<f64> {
        Some((self.q1? + self.q3?) / 2.0)
    }

    pub fn range(&self) -> Option<f64> {
        Some(self.max? - self.min?)
    }

    pub fn iqr(&self) -> Option<f64> {
        Some(self.q3? - self.q1?)
    }

    /// The summary of `shift + scale * X` for `scale > 0`.
    pub fn affine(&self, shift: f64, scale: f64) -> Self {
        let t = |v: f64| shift + scale * v;
        FiveNumberSummary {
            min: self.min.map(t),
            q1: self.q1.map(t),
            median: t(self.median),
            q3: self.q3.map(t),
            max: self.max.map(t),
            ..*self
        }
    }
}
