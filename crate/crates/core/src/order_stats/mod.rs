//! Normal primitives and moments of normal order statistics.
//!
//! Two independent engines produce [`OrderStatMoments`]: a seeded Monte
//! Carlo estimator and a deterministic quadrature. The quadrature is the
//! reference; Monte Carlo carries a per-entry standard error.

mod asymptotic;
mod moments;
mod monte_carlo;
pub mod normal;
mod quadrature;

pub use asymptotic::{asymptotic_cov, AsymptoticQuantileCov};
pub use moments::{Aggregates, Backend, OrderStatMoments, MAX, MEDIAN, MIN, Q1, Q3};
pub use monte_carlo::{moments_mc, DEFAULT_REPLICATES, MIN_REPLICATES};
pub use normal::{quantile as normal_quantile, NormalParams};
pub use quadrature::{moments_quadrature, MAX_QUADRATURE_N};

use crate::error::Result;

/// Moments from the requested backend. `replicates` and `seed` only matter
/// for Monte Carlo.
pub fn moments(n: usize, backend: Backend, replicates: u64, seed: u64) -> Result<OrderStatMoments> {
    match backend {
        Backend::Quadrature => moments_quadrature(n),
        Backend::MonteCarlo => moments_mc(n, replicates, seed),
    }
}
