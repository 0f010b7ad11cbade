//! Relative-MSE comparison of mean estimators on simulated samples.
//!
//! For every grid size `n` and replicate `r`, a sample is drawn from the
//! replicate's own stream keyed by `(seed, distribution, n, r)`, summarized
//! under the scenario, and fed to each estimator. The reported RMSE is the
//! summed squared error of an estimator divided by that of the full-sample
//! mean over the same replicates.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Beta, Distribution, Exp, LogNormal, Normal, Weibull};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::estimators::{mean_bland, mean_hozo, mean_wan_s2, mean_weighted, HozoMode};
use crate::order_stats::moments_quadrature;
use crate::rng::{derive_key, replicate_rng};
use crate::summary::{quarter_index, summary_ranks, FiveNumberSummary, Scenario};
use crate::weights::{approx_weight, optimal_weights, WeightSet};

pub const MIN_SIM_REPLICATES: u64 = 1_000;
pub const DEFAULT_SIM_REPLICATES: u64 = 100_000;
pub const DEFAULT_BATCHES: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DistributionSpec {
    Normal { mu: f64, sigma: f64 },
    /// `exp(N(location, scale²))`.
    Lognormal { location: f64, scale: f64 },
    Beta { alpha: f64, beta: f64 },
    Exponential { rate: f64 },
    Weibull { shape: f64, scale: f64 },
}

impl DistributionSpec {
    pub const NORMAL: Self = DistributionSpec::Normal { mu: 50.0, sigma: 17.0 };
    pub const LOGNORMAL: Self = DistributionSpec::Lognormal {
        location: 4.0,
        scale: 0.3,
    };
    pub const BETA: Self = DistributionSpec::Beta { alpha: 9.0, beta: 4.0 };
    pub const EXPONENTIAL: Self = DistributionSpec::Exponential { rate: 10.0 };
    pub const WEIBULL: Self = DistributionSpec::Weibull {
        shape: 2.0,
        scale: 35.0,
    };

    /// The five reference distributions.
    pub const ALL: [Self; 5] = [
        Self::NORMAL,
        Self::LOGNORMAL,
        Self::BETA,
        Self::EXPONENTIAL,
        Self::WEIBULL,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            DistributionSpec::Normal { .. } => "normal",
            DistributionSpec::Lognormal { .. } => "lognormal",
            DistributionSpec::Beta { .. } => "beta",
            DistributionSpec::Exponential { .. } => "exponential",
            DistributionSpec::Weibull { .. } => "weibull",
        }
    }

    fn label(&self) -> u64 {
        match self {
            DistributionSpec::Normal { .. } => 1,
            DistributionSpec::Lognormal { .. } => 2,
            DistributionSpec::Beta { .. } => 3,
            DistributionSpec::Exponential { .. } => 4,
            DistributionSpec::Weibull { .. } => 5,
        }
    }

    pub fn true_mean(&self) -> f64 {
        match *self {
            DistributionSpec::Normal { mu, .. } => mu,
            DistributionSpec::Lognormal { location, scale } => (location + scale * scale / 2.0).exp(),
            DistributionSpec::Beta { alpha, beta } => alpha / (alpha + beta),
            DistributionSpec::Exponential { rate } => 1.0 / rate,
            DistributionSpec::Weibull { shape, scale } => scale * gamma(1.0 + 1.0 / shape),
        }
    }

    fn sampler(&self) -> Result<Sampler> {
        let bad = |e: &dyn fmt::Display| Error::Domain(format!("{}: {e}", self.name()));
        Ok(match *self {
            DistributionSpec::Normal { mu, sigma } => Sampler::Normal(Normal::new(mu, sigma).map_err(|e| bad(&e))?),
            DistributionSpec::Lognormal { location, scale } => {
                Sampler::Lognormal(LogNormal::new(location, scale).map_err(|e| bad(&e))?)
            }
            DistributionSpec::Beta { alpha, beta } => Sampler::Beta(Beta::new(alpha, beta).map_err(|e| bad(&e))?),
            DistributionSpec::Exponential { rate } => Sampler::Exp(Exp::new(rate).map_err(|e| bad(&e))?),
            DistributionSpec::Weibull { shape, scale } => {
                Sampler::Weibull(Weibull::new(scale, shape).map_err(|e| bad(&e))?)
            }
        })
    }
}

impl FromStr for DistributionSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase();
        Self::ALL
            .into_iter()
            .find(|d| d.name() == key)
            .ok_or_else(|| Error::InvalidInput(format!("unknown distribution {s:?}")))
    }
}

impl fmt::Display for DistributionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

enum Sampler {
    Normal(Normal<f64>),
    Lognormal(LogNormal<f64>),
    Beta(Beta<f64>),
    Exp(Exp<f64>),
    Weibull(Weibull<f64>),
}

impl Sampler {
    fn fill<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        match self {
            Sampler::Normal(d) => out.iter_mut().for_each(|x| *x = d.sample(rng)),
            Sampler::Lognormal(d) => out.iter_mut().for_each(|x| *x = d.sample(rng)),
            Sampler::Beta(d) => out.iter_mut().for_each(|x| *x = d.sample(rng)),
            Sampler::Exp(d) => out.iter_mut().for_each(|x| *x = d.sample(rng)),
            Sampler::Weibull(d) => out.iter_mut().for_each(|x| *x = d.sample(rng)),
        }
    }
}

/// `n` i.i.d. draws from `spec`, sorted ascending.
pub fn draw_sample<R: Rng + ?Sized>(spec: &DistributionSpec, n: usize, rng: &mut R) -> Result<Vec<f64>> {
    if n < 5 {
        return Err(Error::InvalidInput(format!("sample size {n} < 5")));
    }
    let mut out = vec![0.0; n];
    spec.sampler()?.fill(rng, &mut out);
    out.sort_unstable_by(f64::total_cmp);
    Ok(out)
}

/// Reads the scenario's summary values off a sorted sample of size `4Q+1`.
pub fn summarize(sorted: &[f64], scenario: Scenario) -> Result<FiveNumberSummary> {
    let n = sorted.len();
    let [r_min, r_q1, r_med, r_q3, r_max] = summary_ranks(n)?;
    let at = |rank: usize| sorted[rank - 1];
    let ext = scenario.has_extremes();
    let qrt = scenario.has_quartiles();
    FiveNumberSummary::new(
        scenario,
        n,
        ext.then(|| at(r_min)),
        qrt.then(|| at(r_q1)),
        at(r_med),
        qrt.then(|| at(r_q3)),
        ext.then(|| at(r_max)),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimMethod {
    /// Mean of the full sample; the RMSE denominator.
    SampleMean,
    Hozo,
    HozoAsApplied,
    Wan,
    Bland,
    OptimalApprox,
    OptimalExact,
}

impl SimMethod {
    pub const ALL: [SimMethod; 7] = [
        SimMethod::SampleMean,
        SimMethod::Hozo,
        SimMethod::HozoAsApplied,
        SimMethod::Wan,
        SimMethod::Bland,
        SimMethod::OptimalApprox,
        SimMethod::OptimalExact,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SimMethod::SampleMean => "sample_mean",
            SimMethod::Hozo => "hozo",
            SimMethod::HozoAsApplied => "hozo_as_applied",
            SimMethod::Wan => "wan",
            SimMethod::Bland => "bland",
            SimMethod::OptimalApprox => "optimal_approx",
            SimMethod::OptimalExact => "optimal_exact",
        }
    }

    pub fn supports(self, scenario: Scenario) -> bool {
        match self {
            SimMethod::Hozo | SimMethod::HozoAsApplied => scenario == Scenario::S1,
            SimMethod::Wan => scenario == Scenario::S2,
            SimMethod::Bland => scenario == Scenario::S3,
            _ => true,
        }
    }

    /// The methods applicable to a scenario, in report order.
    pub fn defaults_for(scenario: Scenario) -> Vec<SimMethod> {
        Self::ALL
            .into_iter()
            .filter(|m| *m != SimMethod::OptimalExact && m.supports(scenario))
            .collect()
    }
}

impl fmt::Display for SimMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SimMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_");
        Self::ALL
            .into_iter()
            .find(|m| m.as_str() == key)
            .ok_or_else(|| Error::InvalidInput(format!("unknown simulation method {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub distribution: DistributionSpec,
    pub scenario: Scenario,
    pub methods: Vec<SimMethod>,
    pub n_grid: Vec<usize>,
    pub replicates: u64,
    pub seed: u64,
    pub batches: usize,
}

/// `{5, 9, ..., 101}`.
pub fn default_grid() -> Vec<usize> {
    (5..=101).step_by(4).collect()
}

impl SimulationConfig {
    pub fn new(distribution: DistributionSpec, scenario: Scenario, seed: u64) -> Self {
        Self {
            distribution,
            scenario,
            methods: SimMethod::defaults_for(scenario),
            n_grid: default_grid(),
            replicates: DEFAULT_SIM_REPLICATES,
            seed,
            batches: DEFAULT_BATCHES,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_grid.is_empty() {
            return Err(Error::InvalidInput("empty sample-size grid".into()));
        }
        for &n in &self.n_grid {
            quarter_index(n)?;
        }
        if self.replicates < MIN_SIM_REPLICATES {
            return Err(Error::InvalidInput(format!(
                "{} replicates requested, at least {MIN_SIM_REPLICATES} required",
                self.replicates
            )));
        }
        if self.batches < 2 || self.batches as u64 > self.replicates {
            return Err(Error::InvalidInput(format!("invalid batch count {}", self.batches)));
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidInput("no methods requested".into()));
        }
        if let Some(m) = self.methods.iter().find(|m| !m.supports(self.scenario)) {
            return Err(Error::ScenarioShape(format!(
                "method {m} does not apply to scenario {}",
                self.scenario
            )));
        }
        self.distribution.sampler().map(|_| ())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RmseRow {
    pub distribution: String,
    pub scenario: Scenario,
    pub n: usize,
    pub method: SimMethod,
    pub rmse: f64,
    pub mc_std_error: f64,
    #[serde(rename = "T")]
    pub replicates: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RmseReport {
    pub config: SimulationConfig,
    pub rows: Vec<RmseRow>,
}

impl RmseReport {
    pub fn get(&self, n: usize, method: SimMethod) -> Option<&RmseRow> {
        self.rows.iter().find(|r| r.n == n && r.method == method)
    }
}

/// Per-`n` estimator weights, resolved before sampling.
struct Plan {
    approx: Option<WeightSet>,
    exact: Option<WeightSet>,
}

fn plan(config: &SimulationConfig, n: usize) -> Result<Plan> {
    let approx = config
        .methods
        .contains(&SimMethod::OptimalApprox)
        .then(|| approx_weight(config.scenario, n))
        .transpose()?;
    let exact = if config.methods.contains(&SimMethod::OptimalExact) {
        Some(optimal_weights(config.scenario, &moments_quadrature(n)?)?)
    } else {
        None
    };
    Ok(Plan { approx, exact })
}

fn estimate(method: SimMethod, sample: &[f64], s: &FiveNumberSummary, plan: &Plan) -> Result<f64> {
    Ok(match method {
        SimMethod::SampleMean => sample.iter().sum::<f64>() / sample.len() as f64,
        SimMethod::Hozo => mean_hozo(s, HozoMode::Thresholded)?.value,
        SimMethod::HozoAsApplied => mean_hozo(s, HozoMode::Unconditional)?.value,
        SimMethod::Wan => mean_wan_s2(s)?.value,
        SimMethod::Bland => mean_bland(s)?.value,
        SimMethod::OptimalApprox => mean_weighted(s, plan.approx.as_ref().expect("planned"))?.value,
        SimMethod::OptimalExact => mean_weighted(s, plan.exact.as_ref().expect("planned"))?.value,
    })
}

/// Runs the RMSE protocol over the whole grid.
///
/// Replicates are split into `batches` contiguous ranges that run in
/// parallel and are reduced in batch order, so the report does not depend
/// on the worker count. The standard error comes from the spread of the
/// per-batch ratios.
pub fn run_rmse(config: &SimulationConfig) -> Result<RmseReport> {
    config.validate()?;
    let sampler = config.distribution.sampler()?;
    let mu = config.distribution.true_mean();
    let t = config.replicates;
    let b = config.batches;
    let mut rows = Vec::with_capacity(config.n_grid.len() * config.methods.len());

    for &n in &config.n_grid {
        let plan = plan(config, n)?;
        let key = derive_key(config.seed, &[config.distribution.label(), n as u64]);
        let k = config.methods.len() + 1;
        // Each batch is a contiguous replicate range summed in order.
        let per_batch: Vec<Vec<f64>> = (0..b)
            .into_par_iter()
            .map(|batch| {
                let lo = (batch as u128 * t as u128 / b as u128) as u64;
                let hi = ((batch + 1) as u128 * t as u128 / b as u128) as u64;
                let mut sums = vec![0.0; k];
                let mut sample = vec![0.0; n];
                for r in lo..hi {
                    let mut rng = replicate_rng(key, r);
                    sampler.fill(&mut rng, &mut sample);
                    sample.sort_unstable_by(f64::total_cmp);
                    let s = summarize(&sample, config.scenario)?;
                    let full = estimate(SimMethod::SampleMean, &sample, &s, &plan)? - mu;
                    sums[0] += full * full;
                    for (j, &m) in config.methods.iter().enumerate() {
                        let e = estimate(m, &sample, &s, &plan)? - mu;
                        sums[j + 1] += e * e;
                    }
                }
                Ok(sums)
            })
            .collect::<Result<_>>()?;
        let mut totals = vec![0.0; k];
        for p in &per_batch {
            for j in 0..k {
                totals[j] += p[j];
            }
        }
        if !(totals[0] > 0.0) || per_batch.iter().any(|p| !(p[0] > 0.0)) {
            return Err(Error::InternalConsistency(format!(
                "zero squared error for the sample mean at n = {n}"
            )));
        }
        for (j, &m) in config.methods.iter().enumerate() {
            let rmse = totals[j + 1] / totals[0];
            let ratios: Vec<f64> = per_batch.iter().map(|p| p[j + 1] / p[0]).collect();
            let mean = ratios.iter().sum::<f64>() / b as f64;
            let var = ratios.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (b - 1) as f64;
            rows.push(RmseRow {
                distribution: config.distribution.name().to_string(),
                scenario: config.scenario,
                n,
                method: m,
                rmse,
                mc_std_error: (var / b as f64).sqrt(),
                replicates: t,
            });
        }
    }
    Ok(RmseReport {
        config: config.clone(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::replicate_rng;

    #[test]
    fn true_means() {
        assert_eq!(DistributionSpec::NORMAL.true_mean(), 50.0);
        assert!((DistributionSpec::LOGNORMAL.true_mean() - 57.11123).abs() < 1e-4);
        assert!((DistributionSpec::BETA.true_mean() - 9.0 / 13.0).abs() < 1e-15);
        assert!((DistributionSpec::EXPONENTIAL.true_mean() - 0.1).abs() < 1e-15);
        assert!((DistributionSpec::WEIBULL.true_mean() - 31.01794).abs() < 1e-4);
    }

    #[test]
    fn summarize_ranks() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let s = summarize(&x, Scenario::S3).unwrap();
        assert_eq!(
            (s.min, s.q1, s.median, s.q3, s.max),
            (Some(1.0), Some(2.0), 3.0, Some(4.0), Some(5.0))
        );
        let s = summarize(&x, Scenario::S1).unwrap();
        assert_eq!((s.min, s.q1, s.median, s.q3, s.max), (Some(1.0), None, 3.0, None, Some(5.0)));
        let nine: Vec<f64> = (1..=9).map(f64::from).collect();
        let s = summarize(&nine, Scenario::S2).unwrap();
        assert_eq!((s.q1, s.q3), (Some(3.0), Some(7.0)));
        assert!(matches!(summarize(&nine[..8], Scenario::S2), Err(Error::ScenarioShape(_))));
    }

    #[test]
    fn draws_are_sorted() {
        let mut rng = replicate_rng(9, 0);
        for d in DistributionSpec::ALL {
            let x = draw_sample(&d, 41, &mut rng).unwrap();
            assert!(x.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn config_validation() {
        let mut c = SimulationConfig::new(DistributionSpec::NORMAL, Scenario::S1, 1);
        c.replicates = 999;
        assert!(c.validate().is_err());
        c.replicates = 1_000;
        c.n_grid = vec![5, 7];
        assert!(matches!(c.validate(), Err(Error::ScenarioShape(_))));
        c.n_grid = vec![5];
        c.methods = vec![SimMethod::Wan];
        assert!(matches!(c.validate(), Err(Error::ScenarioShape(_))));
    }

    #[test]
    fn control_is_exactly_one_and_deterministic() {
        let mut c = SimulationConfig::new(DistributionSpec::EXPONENTIAL, Scenario::S1, 7);
        c.n_grid = vec![5, 13];
        c.replicates = 2_000;
        let a = run_rmse(&c).unwrap();
        let b = run_rmse(&c).unwrap();
        assert_eq!(a, b);
        for n in [5, 13] {
            assert_eq!(a.get(n, SimMethod::SampleMean).unwrap().rmse, 1.0);
            assert_eq!(a.get(n, SimMethod::SampleMean).unwrap().mc_std_error, 0.0);
        }
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        assert_eq!(pool.install(|| run_rmse(&c).unwrap()), a);
    }
}
