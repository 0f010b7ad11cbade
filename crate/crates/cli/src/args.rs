use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

use optmean::estimators::SdMethod;
use optmean::meta::Profile;
use optmean::order_stats::{Backend, DEFAULT_REPLICATES};
use optmean::rng::DEFAULT_SEED;
use optmean::simulation::{DistributionSpec, SimMethod, DEFAULT_BATCHES, DEFAULT_SIM_REPLICATES};
use optmean::Scenario;

/// Estimate sample means from five-number summaries, tabulate optimal
/// weights, fit their closed forms, run RMSE simulations and pool studies.
#[derive(Debug, Parser)]
#[command(name = "optmean", version)]
pub struct Cli {
    /// Base seed for every random stream.
    #[arg(long, global = true, env = "OPTMEAN_SEED", default_value_t = DEFAULT_SEED)]
    pub seed: u64,

    /// Output format. Defaults to json for `fit`, csv otherwise.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    /// Write to this file instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate the mean (and optionally the SD) of one summary or a CSV batch.
    Estimate(EstimateArgs),
    /// Exact and approximate optimal weights over a grid of sample sizes.
    Weights(WeightsArgs),
    /// Least-squares fit of the closed-form weight curves.
    Fit(FitArgs),
    /// Relative MSE of the mean estimators on simulated samples.
    Simulate(SimulateArgs),
    /// Effect sizes, heterogeneity and random-effects pooling for a study table.
    Meta(MetaArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BackendArg {
    Mc,
    Quad,
}

impl From<BackendArg> for Backend {
    fn from(b: BackendArg) -> Self {
        match b {
            BackendArg::Mc => Backend::MonteCarlo,
            BackendArg::Quad => Backend::Quadrature,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MeanMethod {
    /// `(a + 2m + b)/4` for n <= 25, the median above (S1).
    Hozo,
    /// `(a + 2m + b)/4` for every n (S1).
    HozoAsApplied,
    /// `(q1 + m + q3)/3` (S2).
    Wan,
    /// `(a + 2q1 + 2m + 2q3 + b)/8` (S3).
    Bland,
    /// Closed-form optimal weights.
    OptimalApprox,
    /// Optimal weights from order-statistic moments (n = 4Q+1).
    OptimalExact,
}

impl MeanMethod {
    pub fn name(self) -> &'static str {
        match self {
            MeanMethod::Hozo => "hozo",
            MeanMethod::HozoAsApplied => "hozo-as-applied",
            MeanMethod::Wan => "wan",
            MeanMethod::Bland => "bland",
            MeanMethod::OptimalApprox => "optimal-approx",
            MeanMethod::OptimalExact => "optimal-exact",
        }
    }
}

/// Sample sizes given as `lo:hi:step`, a comma list, or a single value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grid(pub Vec<usize>);

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let num = |t: &str| t.trim().parse::<usize>().map_err(|_| format!("invalid size {t:?}"));
        let parts: Vec<&str> = s.split(':').collect();
        let sizes = match parts.as_slice() {
            [lo, hi, step] => {
                let (lo, hi, step) = (num(lo)?, num(hi)?, num(step)?);
                if step == 0 || lo > hi {
                    return Err(format!("empty range {s:?}"));
                }
                (lo..=hi).step_by(step).collect()
            }
            [_] => s.split(',').map(num).collect::<Result<Vec<_>, _>>()?,
            _ => return Err(format!("expected lo:hi:step or a comma list, got {s:?}")),
        };
        if sizes.is_empty() {
            return Err("empty grid".into());
        }
        Ok(Grid(sizes))
    }
}

impl Grid {
    pub fn describe(&self) -> String {
        let v = &self.0;
        if v.len() > 2 {
            let step = v[1] - v[0];
            if v.windows(2).all(|w| w[1] - w[0] == step) {
                return format!("{}:{}:{step}", v[0], v[v.len() - 1]);
            }
        }
        v.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
    }
}

pub fn default_grid() -> Grid {
    Grid((5..=101).step_by(4).collect())
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[arg(long, required_unless_present = "input")]
    pub scenario: Option<Scenario>,
    #[arg(long, required_unless_present = "input")]
    pub n: Option<usize>,
    #[arg(long)]
    pub min: Option<f64>,
    #[arg(long)]
    pub q1: Option<f64>,
    #[arg(long, required_unless_present = "input")]
    pub median: Option<f64>,
    #[arg(long)]
    pub q3: Option<f64>,
    #[arg(long)]
    pub max: Option<f64>,
    #[arg(long, value_enum, default_value = "optimal-approx")]
    pub method: MeanMethod,
    /// Also estimate the standard deviation.
    #[arg(long)]
    pub sd: Option<SdMethod>,
    /// Moments backend for `optimal-exact`.
    #[arg(long, value_enum, default_value = "quad")]
    pub backend: BackendArg,
    /// Monte Carlo replicates for `--backend mc`.
    #[arg(long, default_value_t = DEFAULT_REPLICATES)]
    pub reps: u64,
    /// CSV of summaries with header `scenario,n,min,q1,median,q3,max`.
    #[arg(long, conflicts_with_all = ["scenario", "n", "min", "q1", "median", "q3", "max"])]
    pub input: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct WeightsArgs {
    #[arg(long)]
    pub scenario: Scenario,
    #[arg(long, conflicts_with = "grid")]
    pub n: Option<usize>,
    /// Defaults to 5:101:4.
    #[arg(long)]
    pub grid: Option<Grid>,
    #[arg(long, value_enum, default_value = "quad")]
    pub backend: BackendArg,
    #[arg(long, default_value_t = DEFAULT_REPLICATES)]
    pub reps: u64,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub scenario: Scenario,
    /// Weight table written by `weights`; regenerated from the grid if absent.
    #[arg(long, conflicts_with_all = ["grid", "backend", "reps"])]
    pub input: Option<PathBuf>,
    /// Defaults to 5:101:4.
    #[arg(long)]
    pub grid: Option<Grid>,
    #[arg(long, value_enum, default_value = "quad")]
    pub backend: BackendArg,
    #[arg(long, default_value_t = DEFAULT_REPLICATES)]
    pub reps: u64,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// One or more of normal, lognormal, beta, exponential, weibull.
    #[arg(long, value_delimiter = ',', default_value = "normal")]
    pub distribution: Vec<DistributionSpec>,
    #[arg(long, default_value = "s1")]
    pub scenario: Scenario,
    /// Defaults to 5:101:4.
    #[arg(long)]
    pub grid: Option<Grid>,
    #[arg(long, default_value_t = DEFAULT_SIM_REPLICATES)]
    pub reps: u64,
    /// Comma list; defaults to every method applicable to the scenario
    /// except `optimal_exact`.
    #[arg(long, value_delimiter = ',')]
    pub methods: Vec<SimMethod>,
    #[arg(long, default_value_t = DEFAULT_BATCHES)]
    pub batches: usize,
}

#[derive(Debug, Args)]
pub struct MetaArgs {
    /// Study CSV; defaults to the bundled seven-study table.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, default_value = "table3")]
    pub profile: Profile,
    /// Also write the full result as JSON to this path.
    #[arg(long)]
    pub json_output: Option<PathBuf>,
}
