//! Sample-mean estimation from five-number-summary fragments.
//!
//! A study that reports only `{min, median, max}`, `{q1, median, q3}` or all
//! five values can still enter a meta-analysis once its mean is estimated.
//! This crate provides:
//!
//! - [`order_stats`]: normal CDF/quantile and the moments of normal order
//!   statistics, by quadrature or seeded Monte Carlo.
//! - [`weights`]: MSE-optimal weights on the mid-range, mid-quartile range
//!   and median, their closed-form approximations, and the power-law fit
//!   that produces those approximations.
//! - [`estimators`]: legacy and optimal mean estimators plus range/IQR based
//!   standard-deviation estimators.
//! - [`simulation`]: relative-MSE comparison of estimators on five parent
//!   distributions.
//! - [`meta`]: standardized mean differences, heterogeneity and
//!   DerSimonian–Laird pooling over heterogeneous study records.

// Negated float comparisons are used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimators;
pub mod integrate;
pub mod meta;
pub mod order_stats;
pub mod rng;
pub mod simulation;
pub mod summary;
pub mod weights;

pub use error::{Error, Result};
pub use summary::{FiveNumberSummary, Scenario};
