use serde::{Deserialize, Serialize};

use super::normal::NormalParams;
use crate::error::{Error, Result};
use crate::summary::summary_ranks;

/// Position of each summary value inside the moment arrays.
pub const MIN: usize = 0;
pub const Q1: usize = 1;
pub const MEDIAN: usize = 2;
pub const Q3: usize = 3;
pub const MAX: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    MonteCarlo,
    Quadrature,
}

impl Backend {
    pub fn as_str(self) -> &'static str {
        match self {
            Backend::MonteCarlo => "mc",
            Backend::Quadrature => "quad",
        }
    }
}

/// First and second moments of the five summary order statistics of a
/// sample of size `n = 4Q + 1`.
///
/// Entries are ordered `[min, q1, median, q3, max]`, i.e. ranks
/// `{1, Q+1, 2Q+1, 3Q+1, n}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderStatMoments {
    pub n: usize,
    pub ranks: [usize; 5],
    /// `E(Z_(i))`.
    pub means: [f64; 5],
    /// `E(Z_(i) Z_(j))`, symmetric.
    pub products: [[f64; 5]; 5],
    pub mean_errors: [f64; 5],
    pub product_errors: [[f64; 5]; 5],
    pub backend: Backend,
    /// Largest per-entry 1-sigma numerical error.
    pub std_error: f64,
    /// Monte Carlo replicate count; `None` for quadrature.
    pub replicates: Option<u64>,
}

/// Variances and covariances of the three location measures, in the notation
/// of the optimal-weight formulas: `a+b`, `q1+q3` and `m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    /// `Var(a+b)`
    pub var_extremes: f64,
    /// `Var(q1+q3)`
    pub var_quartiles: f64,
    /// `Var(m)`
    pub var_median: f64,
    /// `Cov(a+b, q1+q3)`
    pub cov_extremes_quartiles: f64,
    /// `Cov(a+b, m)`
    pub cov_extremes_median: f64,
    /// `Cov(q1+q3, m)`
    pub cov_quartiles_median: f64,
}

impl Aggregates {
    /// Covariance matrix of `(a+b, q1+q3, m)`.
    pub fn matrix(&self) -> [[f64; 3]; 3] {
        [
            [
                self.var_extremes,
                self.cov_extremes_quartiles,
                self.cov_extremes_median,
            ],
            [
                self.cov_extremes_quartiles,
                self.var_quartiles,
                self.cov_quartiles_median,
            ],
            [
                self.cov_extremes_median,
                self.cov_quartiles_median,
                self.var_median,
            ],
        ]
    }
}

impl OrderStatMoments {
    pub(crate) fn from_parts(
        n: usize,
        means: [f64; 5],
        products: [[f64; 5]; 5],
        mean_errors: [f64; 5],
        product_errors: [[f64; 5]; 5],
        backend: Backend,
        replicates: Option<u64>,
    ) -> Result<Self> {
        let ranks = summary_ranks(n)?;
        let std_error = mean_errors
            .iter()
            .chain(product_errors.iter().flatten())
            .fold(0.0_f64, |acc, &e| acc.max(e));
        Ok(OrderStatMoments {
            n,
            ranks,
            means,
            products,
            mean_errors,
            product_errors,
            backend,
            std_error,
            replicates,
        })
    }

    pub fn cov(&self, i: usize, j: usize) -> f64 {
        self.products[i][j] - self.means[i] * self.means[j]
    }

    pub fn aggregates(&self) -> Aggregates {
        let c = |i, j| self.cov(i, j);
        Aggregates {
            var_extremes: c(MIN, MIN) + c(MAX, MAX) + 2.0 * c(MIN, MAX),
            var_quartiles: c(Q1, Q1) + c(Q3, Q3) + 2.0 * c(Q1, Q3),
            var_median: c(MEDIAN, MEDIAN),
            cov_extremes_quartiles: c(MIN, Q1) + c(MIN, Q3) + c(MAX, Q1) + c(MAX, Q3),
            cov_extremes_median: c(MIN, MEDIAN) + c(MAX, MEDIAN),
            cov_quartiles_median: c(Q1, MEDIAN) + c(Q3, MEDIAN),
        }
    }

    /// Largest `|E(Z_(i)) + E(Z_(n−i+1))|` over the five ranks (the median
    /// pairs with itself).
    pub fn mean_symmetry_defect(&self) -> f64 {
        (0..5)
            .map(|i| (self.means[i] + self.means[4 - i]).abs())
            .fold(0.0, f64::max)
    }

    /// Largest `|E(Z_(i)Z_(j)) − E(Z_(n−i+1)Z_(n−j+1))|`.
    pub fn product_symmetry_defect(&self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..5 {
            for j in i..5 {
                worst = worst.max((self.products[i][j] - self.products[4 - j][4 - i]).abs());
            }
        }
        worst
    }

    /// Checks every principal minor of the `(a+b, q1+q3, m)` covariance
    /// matrix is non-negative within `tol` and the matrix is symmetric.
    pub fn check_psd(&self, tol: f64) -> Result<()> {
        let m = self.aggregates().matrix();
        let det2 = |i: usize, j: usize| m[i][i] * m[j][j] - m[i][j] * m[j][i];
        let det3 = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
        let minors = [m[0][0], m[1][1], m[2][2], det2(0, 1), det2(0, 2), det2(1, 2), det3];
        if let Some(bad) = minors.iter().find(|&&v| v < -tol) {
            return Err(Error::InternalConsistency(format!(
                "covariance matrix of (a+b, q1+q3, m) is not positive semi-definite (minor {bad:e}) for n = {}",
                self.n
            )));
        }
        if (0..5).any(|i| !(self.products[i][i] > 0.0)) {
            return Err(Error::InternalConsistency(format!(
                "non-positive second moment for n = {}",
                self.n
            )));
        }
        Ok(())
    }

    /// Moments of `X = mu + sigma Z`.
    pub fn location_scale(&self, params: NormalParams) -> Self {
        let NormalParams { mu, sigma } = params;
        let mut out = self.clone();
        for i in 0..5 {
            out.means[i] = mu + sigma * self.means[i];
            out.mean_errors[i] = sigma * self.mean_errors[i];
            for j in 0..5 {
                out.products[i][j] = mu * mu
                    + mu * sigma * (self.means[i] + self.means[j])
                    + sigma * sigma * self.products[i][j];
                out.product_errors[i][j] = sigma.abs() * mu.abs() * (self.mean_errors[i] + self.mean_errors[j])
                    + sigma * sigma * self.product_errors[i][j];
            }
        }
        out.std_error = out
            .mean_errors
            .iter()
            .chain(out.product_errors.iter().flatten())
            .fold(0.0_f64, |acc, &e| acc.max(e));
        out
    }
}
