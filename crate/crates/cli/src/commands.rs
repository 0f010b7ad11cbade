use std::collections::BTreeMap;
use std::fs::File;
use std::path::Path;

use serde::Serialize;

use optmean::estimators::{
    mean_bland, mean_hozo, mean_optimal, mean_wan_s2, sd_estimate, Estimate, HozoMode, WeightChoice,
};
use optmean::meta::{parse_studies, run_case_study, write_effects_csv, MetaResult, TABLE1_CSV};
use optmean::order_stats::{moments, Backend, OrderStatMoments};
use optmean::simulation::{run_rmse, RmseRow, SimMethod, SimulationConfig};
use optmean::weights::{
    approx_weight, bland_weights, fit_power_law, hozo_unconditional_weight, hozo_weight, optimal_weights,
    wan_weight, FitCoefficients, WeightSet, WeightSource,
};
use optmean::{FiveNumberSummary, Scenario};

use crate::args::{default_grid, EstimateArgs, FitArgs, Format, MeanMethod, MetaArgs, SimulateArgs, WeightsArgs};
use crate::output::{csv_body, csv_document, json_document, num, opt_num, CliError, CliResult, Header};

/// Shared run settings.
pub struct Context {
    pub seed: u64,
    pub format: Format,
}

fn reps_label(backend: Backend, reps: u64) -> String {
    match backend {
        Backend::MonteCarlo => reps.to_string(),
        Backend::Quadrature => "-".into(),
    }
}

fn render<T: Serialize>(ctx: &Context, header: &Header, csv: impl FnOnce() -> CliResult<String>, footer: &[String], json: &T) -> CliResult<String> {
    match ctx.format {
        Format::Csv => Ok(csv_document(header, &csv()?, footer)),
        Format::Json => json_document(header, json),
    }
}

#[derive(Serialize)]
struct EstimateRecord {
    summary: FiveNumberSummary,
    method: &'static str,
    mean: Estimate,
    /// Weights on mid-range, mid-quartile range and median.
    weights: Option<WeightSet>,
    sd: Option<Estimate>,
}

struct MomentCache {
    backend: Backend,
    reps: u64,
    seed: u64,
    cache: BTreeMap<usize, OrderStatMoments>,
}

impl MomentCache {
    fn get(&mut self, n: usize) -> optmean::Result<&OrderStatMoments> {
        if !self.cache.contains_key(&n) {
            let m = moments(n, self.backend, self.reps, self.seed)?;
            self.cache.insert(n, m);
        }
        Ok(&self.cache[&n])
    }
}

fn estimate_one(
    s: &FiveNumberSummary,
    args: &EstimateArgs,
    cache: &mut MomentCache,
) -> optmean::Result<EstimateRecord> {
    let (mean, implied) = match args.method {
        MeanMethod::Hozo => (mean_hozo(s, HozoMode::Thresholded)?, Some(hozo_weight(s.n))),
        MeanMethod::HozoAsApplied => (
            mean_hozo(s, HozoMode::Unconditional)?,
            Some(hozo_unconditional_weight(s.n)),
        ),
        MeanMethod::Wan => (mean_wan_s2(s)?, Some(wan_weight(s.n))),
        MeanMethod::Bland => (mean_bland(s)?, Some(bland_weights(s.n))),
        MeanMethod::OptimalApprox => (mean_optimal(s, WeightChoice::Approx)?, None),
        MeanMethod::OptimalExact => (mean_optimal(s, WeightChoice::Exact(cache.get(s.n)?))?, None),
    };
    let sd = args.sd.map(|m| sd_estimate(s, m)).transpose()?;
    Ok(EstimateRecord {
        summary: *s,
        method: args.method.name(),
        weights: mean.weights.or(implied),
        mean,
        sd,
    })
}

#[derive(serde::Deserialize)]
struct SummaryRow {
    scenario: String,
    n: usize,
    min: Option<f64>,
    q1: Option<f64>,
    median: f64,
    q3: Option<f64>,
    max: Option<f64>,
}

fn read_summaries(path: &Path) -> CliResult<Vec<FiveNumberSummary>> {
    let file = File::open(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(file);
    let mut out = Vec::new();
    let mut issues = Vec::new();
    for (i, row) in rdr.deserialize::<SummaryRow>().enumerate() {
        let parsed = row.map_err(|e| e.to_string()).and_then(|r| {
            let scenario: Scenario = r.scenario.parse().map_err(|e: optmean::Error| e.to_string())?;
            FiveNumberSummary::new(scenario, r.n, r.min, r.q1, r.median, r.q3, r.max).map_err(|e| e.to_string())
        });
        match parsed {
            Ok(s) => out.push(s),
            Err(e) => issues.push(format!("row {}: {e}", i + 1)),
        }
    }
    if !issues.is_empty() {
        return Err(CliError::Input(issues.join("; ")));
    }
    if out.is_empty() {
        return Err(CliError::Input(format!("{}: no summaries", path.display())));
    }
    Ok(out)
}

pub fn estimate(ctx: &Context, args: &EstimateArgs) -> CliResult<String> {
    let summaries = match &args.input {
        Some(path) => read_summaries(path)?,
        None => {
            let (Some(scenario), Some(n), Some(median)) = (args.scenario, args.n, args.median) else {
                return Err(CliError::Usage("--scenario, --n and --median are required".into()));
            };
            vec![FiveNumberSummary::new(
                scenario, n, args.min, args.q1, median, args.q3, args.max,
            )?]
        }
    };
    let backend: Backend = args.backend.into();
    let mut cache = MomentCache {
        backend,
        reps: args.reps,
        seed: ctx.seed,
        cache: BTreeMap::new(),
    };
    let mut records = Vec::with_capacity(summaries.len());
    let mut issues = Vec::new();
    for (i, s) in summaries.iter().enumerate() {
        match estimate_one(s, args, &mut cache) {
            Ok(r) => records.push(r),
            Err(e) if e.is_numerical() => return Err(e.into()),
            Err(e) => issues.push(format!("summary {}: {e}", i + 1)),
        }
    }
    if !issues.is_empty() {
        return Err(CliError::Input(issues.join("; ")));
    }

    let mut header = Header::new("estimate")
        .with("method", args.method.name())
        .with("sd_method", args.sd.map_or("-", |m| m.as_str()));
    if args.method == MeanMethod::OptimalExact {
        header = header
            .with("backend", backend.as_str())
            .with("reps", reps_label(backend, args.reps));
    }
    header = header.with("seed", ctx.seed);
    if let Some(p) = &args.input {
        header = header.with("input", p.display());
    }

    let csv = || {
        csv_body(
            &[
                "scenario",
                "n",
                "method",
                "estimate",
                "w_mid_range",
                "w_mid_quartile",
                "w_median",
                "sd_method",
                "sd_estimate",
            ],
            records.iter().map(|r| {
                let sc = r.summary.scenario;
                let w = r.weights;
                vec![
                    sc.to_string(),
                    r.summary.n.to_string(),
                    r.method.to_string(),
                    num(r.mean.value),
                    opt_num(w.filter(|_| sc.has_extremes()).map(|w| w.mid_range)),
                    opt_num(w.filter(|_| sc.has_quartiles()).map(|w| w.mid_quartile)),
                    opt_num(w.map(|w| w.median())),
                    r.sd.map(|e| e.method.to_string()).unwrap_or_default(),
                    opt_num(r.sd.map(|e| e.value)),
                ]
            }),
        )
    };
    render(ctx, &header, csv, &[], &records)
}

#[derive(Serialize)]
struct WeightRow {
    n: usize,
    exact: WeightSet,
    approx: WeightSet,
    backend: &'static str,
    std_error: f64,
}

fn weight_rows(scenario: Scenario, grid: &[usize], backend: Backend, reps: u64, seed: u64) -> CliResult<Vec<WeightRow>> {
    grid.iter()
        .map(|&n| {
            let m = moments(n, backend, reps, seed)?;
            Ok(WeightRow {
                n,
                exact: optimal_weights(scenario, &m)?,
                approx: approx_weight(scenario, n)?,
                backend: backend.as_str(),
                std_error: m.std_error,
            })
        })
        .collect()
}

pub fn weights(ctx: &Context, args: &WeightsArgs) -> CliResult<String> {
    let grid = match (args.n, &args.grid) {
        (Some(n), _) => crate::args::Grid(vec![n]),
        (None, Some(g)) => g.clone(),
        (None, None) => default_grid(),
    };
    let backend: Backend = args.backend.into();
    let rows = weight_rows(args.scenario, &grid.0, backend, args.reps, ctx.seed)?;
    let header = Header::new("weights")
        .with("scenario", args.scenario)
        .with("grid", grid.describe())
        .with("backend", backend.as_str())
        .with("reps", reps_label(backend, args.reps))
        .with("seed", ctx.seed);
    let s3 = args.scenario == Scenario::S3;
    let csv = || {
        let cols: &[&str] = if s3 {
            &["n", "exact_w1", "exact_w2", "approx_w1", "approx_w2", "backend", "std_error"]
        } else {
            &["n", "exact", "approx", "backend", "std_error"]
        };
        csv_body(
            cols,
            rows.iter().map(|r| {
                let mut v = vec![r.n.to_string()];
                if s3 {
                    v.extend([
                        format!("{:.6}", r.exact.mid_range),
                        format!("{:.6}", r.exact.mid_quartile),
                        format!("{:.6}", r.approx.mid_range),
                        format!("{:.6}", r.approx.mid_quartile),
                    ]);
                } else {
                    v.extend([format!("{:.6}", r.exact.primary()), format!("{:.6}", r.approx.primary())]);
                }
                v.extend([r.backend.to_string(), format!("{:.3e}", r.std_error)]);
                v
            }),
        )
    };
    render(ctx, &header, csv, &[], &rows)
}

fn read_weight_table(path: &Path, scenario: Scenario) -> CliResult<Vec<WeightSet>> {
    let file = File::open(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(file);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Input(format!("{}: missing column {name:?}", path.display())))
    };
    let n_col = col("n")?;
    let cols = if scenario == Scenario::S3 {
        vec![col("exact_w1")?, col("exact_w2")?]
    } else {
        vec![col("exact")?]
    };
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let field = |c: usize| -> CliResult<f64> {
            rec.get(c)
                .unwrap_or("")
                .parse()
                .map_err(|_| CliError::Input(format!("row {}: bad number in column {c}", i + 1)))
        };
        let n: usize = rec
            .get(n_col)
            .unwrap_or("")
            .parse()
            .map_err(|_| CliError::Input(format!("row {}: bad n", i + 1)))?;
        out.push(if scenario == Scenario::S3 {
            WeightSet::s3(field(cols[0])?, field(cols[1])?, n, WeightSource::Custom)?
        } else {
            WeightSet::single(scenario, field(cols[0])?, n, WeightSource::Custom)?
        });
    }
    Ok(out)
}

pub fn fit(ctx: &Context, args: &FitArgs) -> CliResult<String> {
    let mut header = Header::new("fit").with("scenario", args.scenario);
    let table = match &args.input {
        Some(path) => {
            header = header.with("input", path.display());
            read_weight_table(path, args.scenario)?
        }
        None => {
            let grid = args.grid.clone().unwrap_or_else(default_grid);
            let backend: Backend = args.backend.into();
            header = header
                .with("grid", grid.describe())
                .with("backend", backend.as_str())
                .with("reps", reps_label(backend, args.reps));
            weight_rows(args.scenario, &grid.0, backend, args.reps, ctx.seed)?
                .into_iter()
                .map(|r| r.exact)
                .collect()
        }
    };
    header = header.with("seed", ctx.seed);
    let f: FitCoefficients = fit_power_law(&table, args.scenario)?;
    let csv = || {
        csv_body(
            &["scenario", "model", "c1", "c2", "c3", "c4", "residual", "points", "iterations"],
            [vec![
                f.scenario.to_string(),
                serde_json::to_value(f.model)
                    .ok()
                    .and_then(|v| v.as_str().map(str::to_string))
                    .unwrap_or_default(),
                num(f.c1),
                num(f.c2),
                opt_num(f.c3),
                opt_num(f.c4),
                num(f.residual),
                f.points.to_string(),
                f.iterations.to_string(),
            ]],
        )
    };
    render(ctx, &header, csv, &[], &f)
}

pub fn simulate(ctx: &Context, args: &SimulateArgs) -> CliResult<String> {
    let grid = args.grid.clone().unwrap_or_else(default_grid);
    let methods = if args.methods.is_empty() {
        SimMethod::defaults_for(args.scenario)
    } else {
        args.methods.clone()
    };
    let mut rows: Vec<RmseRow> = Vec::new();
    for &dist in &args.distribution {
        let config = SimulationConfig {
            distribution: dist,
            scenario: args.scenario,
            methods: methods.clone(),
            n_grid: grid.0.clone(),
            replicates: args.reps,
            seed: ctx.seed,
            batches: args.batches,
        };
        config.validate()?;
        rows.extend(run_rmse(&config)?.rows);
    }
    let names: Vec<&str> = args.distribution.iter().map(|d| d.name()).collect();
    let header = Header::new("simulate")
        .with("distribution", names.join(","))
        .with("scenario", args.scenario)
        .with("grid", grid.describe())
        .with(
            "methods",
            methods.iter().map(|m| m.as_str()).collect::<Vec<_>>().join(","),
        )
        .with("reps", args.reps)
        .with("batches", args.batches)
        .with("seed", ctx.seed);
    let csv = || {
        csv_body(
            &["distribution", "scenario", "n", "method", "rmse", "mc_std_error", "T"],
            rows.iter().map(|r| {
                vec![
                    r.distribution.clone(),
                    r.scenario.to_string(),
                    r.n.to_string(),
                    r.method.to_string(),
                    format!("{:.6}", r.rmse),
                    format!("{:.6}", r.mc_std_error),
                    r.replicates.to_string(),
                ]
            }),
        )
    };
    render(ctx, &header, csv, &[], &rows)
}

fn meta_footer(r: &MetaResult) -> Vec<String> {
    let h = &r.pooled.heterogeneity;
    vec![
        "var_d is the variance of d; weight = 1/var_d, not normalized".into(),
        format!(
            "heterogeneity: Q = {:.4}, df = {}, p = {:.4}, I2 = {:.3}%",
            h.q, h.df, h.p_value, h.i_squared
        ),
        format!(
            "random effects (DerSimonian-Laird): tau2 = {:.4}, pooled d = {:.4}, 95% CI [{:.4}, {:.4}]",
            r.pooled.tau_squared, r.pooled.pooled_d, r.pooled.pooled_ci95.0, r.pooled.pooled_ci95.1
        ),
    ]
}

pub fn meta(ctx: &Context, args: &MetaArgs) -> CliResult<String> {
    let records = match &args.input {
        Some(path) => {
            let file = File::open(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
            parse_studies(file)?
        }
        None => parse_studies(TABLE1_CSV.as_bytes())?,
    };
    let config = args.profile.config();
    let result = run_case_study(&records, config)?;
    let header = Header::new("meta")
        .with(
            "input",
            args.input
                .as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_else(|| "bundled table1.csv".into()),
        )
        .with("profile", args.profile)
        .with("mean_method", config.mean.as_str())
        .with("sd_method", config.sd.as_str())
        .with("pooling", "dersimonian-laird")
        .with("seed", ctx.seed);
    if let Some(path) = &args.json_output {
        crate::output::emit(&json_document(&header, &result)?, Some(path))?;
    }
    let csv = || {
        let mut buf = Vec::new();
        write_effects_csv(&result, &mut buf)?;
        String::from_utf8(buf).map_err(|e| CliError::Input(e.to_string()))
    };
    render(ctx, &header, csv, &meta_footer(&result), &result)
}
