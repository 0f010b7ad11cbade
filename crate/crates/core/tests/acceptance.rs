//! Acceptance gate: one pass/fail line per criterion, nonzero exit on failure.

use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use optmean::estimators::{
    mean_bland, mean_hozo, mean_optimal, mean_wan_s2, mean_weighted, sd_estimate, HozoMode, SdMethod,
    WeightChoice,
};
use optmean::meta::{parse_studies, run_case_study, Profile, TABLE1_CSV};
use optmean::order_stats::{asymptotic_cov, moments_mc, moments_quadrature, OrderStatMoments};
use optmean::rng::{derive_key, replicate_rng, DEFAULT_SEED};
use optmean::simulation::{run_rmse, summarize, DistributionSpec, SimMethod, SimulationConfig};
use optmean::weights::{
    approx_weight, asymptotic_weight_s2, bland_weights, fit_power_law, hozo_unconditional_weight,
    hozo_weight, mse_s1, mse_s2, mse_s3, optimal_weights, wan_weight, WeightSet,
};
use optmean::{FiveNumberSummary, Scenario};

type Check = Result<String, String>;

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn grid(lo: usize, hi: usize) -> Vec<usize> {
    (lo..=hi).step_by(4).collect()
}

const GOLDEN_N: [usize; 4] = [5, 25, 101, 501];
const TABLE5: [f64; 4] = [0.5514, 0.2642, 0.1114, 0.0338];
const TABLE6: [f64; 4] = [0.7786, 0.7150, 0.7028, 0.6997];
const TABLE7: [(f64, f64); 4] = [(0.4000, 0.4000), (0.1643, 0.5713), (0.0671, 0.6467), (0.0206, 0.6831)];

fn golden_deviation(m: &OrderStatMoments, k: usize) -> Result<f64, String> {
    let w1 = optimal_weights(Scenario::S1, m).map_err(err)?;
    let w2 = optimal_weights(Scenario::S2, m).map_err(err)?;
    let w3 = optimal_weights(Scenario::S3, m).map_err(err)?;
    Ok([
        w1.mid_range - TABLE5[k],
        w2.mid_quartile - TABLE6[k],
        w3.mid_range - TABLE7[k].0,
        w3.mid_quartile - TABLE7[k].1,
    ]
    .iter()
    .fold(0.0_f64, |a, d| a.max(d.abs())))
}

fn criterion_1() -> Check {
    let mut quad_dev = 0.0_f64;
    let mut mc_dev = 0.0_f64;
    let start = Instant::now();
    for (k, &n) in GOLDEN_N.iter().enumerate() {
        quad_dev = quad_dev.max(golden_deviation(&moments_quadrature(n).map_err(err)?, k)?);
    }
    let quad_time = start.elapsed();
    for (k, &n) in GOLDEN_N.iter().enumerate() {
        mc_dev = mc_dev.max(golden_deviation(&moments_mc(n, 2_000_000, DEFAULT_SEED).map_err(err)?, k)?);
    }
    let detail = format!(
        "max |quad - table| = {quad_dev:.5} (tol 0.002, {:.2?}), max |mc - table| = {mc_dev:.5} (tol 0.005, T = 2e6)",
        quad_time
    );
    if quad_dev <= 0.002 && mc_dev <= 0.005 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_2() -> Check {
    let start = Instant::now();
    let w = asymptotic_weight_s2();
    let targets = [
        ((0.5, 0.5), std::f64::consts::FRAC_PI_2),
        ((0.25, 0.25), 1.8568),
        ((0.25, 0.5), 0.9860),
        ((0.25, 0.75), 0.6189),
    ];
    let mut worst = 0.0_f64;
    for ((p, q), target) in targets {
        let c = asymptotic_cov(p, q, 1).map_err(err)?.scaled();
        worst = worst.max((c - target).abs());
    }
    let elapsed = start.elapsed();
    let detail = format!(
        "asymptotic S2 weight {w:.5} (0.699 +/- 0.001), max constant error {worst:.2e} (< 5e-5), {elapsed:.2?}"
    );
    if (w - 0.699).abs() <= 0.001 && worst < 5e-5 && elapsed.as_secs_f64() < 1.0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_3() -> Check {
    let ns = grid(5, 101);
    let mut tables: [Vec<WeightSet>; 3] = Default::default();
    for &n in &ns {
        let m = moments_quadrature(n).map_err(err)?;
        for (t, s) in tables.iter_mut().zip(Scenario::ALL) {
            t.push(optimal_weights(s, &m).map_err(err)?);
        }
    }
    let f1 = fit_power_law(&tables[0], Scenario::S1).map_err(err)?;
    let f2 = fit_power_law(&tables[1], Scenario::S2).map_err(err)?;
    let f3 = fit_power_law(&tables[2], Scenario::S3).map_err(err)?;
    let (c3, c4) = (f3.c3.unwrap_or(f64::NAN), f3.c4.unwrap_or(f64::NAN));
    let rel = |x: f64, t: f64| ((x - t) / t).abs();
    let ok = (f1.c1 - 4.0).abs() <= 0.5
        && (f1.c2 + 0.75).abs() <= 0.05
        && (f2.c1 - 0.39).abs() <= 0.05
        && (f2.c2 + 1.0).abs() <= 0.1
        && rel(f3.c1, 2.2) <= 0.15
        && rel(f3.c2, 0.75) <= 0.15
        && rel(c3, 0.72) <= 0.15
        && rel(c4, 0.55) <= 0.15;
    let detail = format!(
        "S1 ({:.3}, {:.3}), S2 ({:.3}, {:.3}), S3 ({:.3}, {:.3}, {:.3}, {:.3})",
        f1.c1, f1.c2, f2.c1, f2.c2, f3.c1, f3.c2, c3, c4
    );
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn simulate(
    dist: DistributionSpec,
    scenario: Scenario,
    methods: &[SimMethod],
    n_grid: Vec<usize>,
    t: u64,
) -> Result<optmean::simulation::RmseReport, String> {
    let mut c = SimulationConfig::new(dist, scenario, DEFAULT_SEED);
    c.methods = methods.to_vec();
    c.n_grid = n_grid;
    c.replicates = t;
    run_rmse(&c).map_err(err)
}

fn criterion_4() -> Check {
    let start = Instant::now();
    let mut failures = Vec::new();

    let r = simulate(
        DistributionSpec::NORMAL,
        Scenario::S1,
        &[SimMethod::Hozo, SimMethod::OptimalApprox],
        grid(5, 101),
        100_000,
    )?;
    let (mut lo, mut hi, mut min_gap) = (f64::INFINITY, 0.0_f64, f64::INFINITY);
    for n in grid(5, 101) {
        let opt = r.get(n, SimMethod::OptimalApprox).unwrap().rmse;
        let hozo = r.get(n, SimMethod::Hozo).unwrap().rmse;
        lo = lo.min(opt);
        hi = hi.max(opt);
        min_gap = min_gap.min(hozo - opt);
        if opt >= hozo {
            failures.push(format!("normal S1 n={n}: optimal {opt:.4} >= hozo {hozo:.4}"));
        }
    }
    if !(lo >= 0.98 && hi <= 1.6) {
        failures.push(format!("normal S1 optimal RMSE range [{lo:.4}, {hi:.4}] outside [0.98, 1.6]"));
    }

    for dist in [DistributionSpec::LOGNORMAL, DistributionSpec::EXPONENTIAL] {
        let r = simulate(
            dist,
            Scenario::S1,
            &[SimMethod::Hozo, SimMethod::OptimalApprox],
            vec![25, 29],
            100_000,
        )?;
        let jump = |m| (r.get(25, m).unwrap().rmse - r.get(29, m).unwrap().rmse).abs();
        let (jh, jo) = (jump(SimMethod::Hozo), jump(SimMethod::OptimalApprox));
        if jh <= jo {
            failures.push(format!("{dist} hozo jump {jh:.4} <= optimal jump {jo:.4}"));
        }
    }

    let r = simulate(
        DistributionSpec::NORMAL,
        Scenario::S2,
        &[SimMethod::Wan, SimMethod::OptimalApprox],
        grid(5, 101),
        1_000_000,
    )?;
    for n in grid(5, 101) {
        let opt = r.get(n, SimMethod::OptimalApprox).unwrap();
        let wan = r.get(n, SimMethod::Wan).unwrap();
        if opt.rmse > wan.rmse + 2.0 * opt.mc_std_error {
            failures.push(format!("normal S2 n={n}: optimal {:.4} > wan {:.4} + 2 SE", opt.rmse, wan.rmse));
        }
    }

    let r = simulate(
        DistributionSpec::NORMAL,
        Scenario::S3,
        &[SimMethod::Bland, SimMethod::OptimalApprox],
        vec![101],
        100_000,
    )?;
    let bland = r.get(101, SimMethod::Bland).unwrap();
    let opt = r.get(101, SimMethod::OptimalApprox).unwrap();
    let s3_gap = bland.rmse - opt.rmse;
    if s3_gap <= 3.0 * (bland.mc_std_error + opt.mc_std_error) {
        failures.push(format!("normal S3 n=101: bland - optimal = {s3_gap:.4} not > 3 SE"));
    }

    if failures.is_empty() {
        Ok(format!(
            "normal S1 optimal RMSE in [{lo:.4}, {hi:.4}], min(hozo - optimal) = {min_gap:.4}; \
             hozo jumps at n=25/29 dominate; S2 optimal <= wan + 2 SE (T = 1e6); \
             S3 n=101 bland - optimal = {s3_gap:.4}; {:.1?}",
            start.elapsed()
        ))
    } else {
        Err(failures.join("; "))
    }
}

fn criterion_5() -> Check {
    let records = parse_studies(TABLE1_CSV.as_bytes()).map_err(err)?;
    let mut failures = Vec::new();
    let cases = [
        (
            Profile::Table2,
            [0.8656, 0.0824, 0.9190, 0.9637, 0.3353, 0.5882, 0.9584],
            11.6594,
            48.539,
            0.07,
            0.6732,
        ),
        (
            Profile::Table3,
            [0.6622, 0.1588, 0.9852, 0.9637, 0.3353, 0.5882, 0.9084],
            9.2091,
            34.847,
            0.162,
            0.6257,
        ),
    ];
    let mut summary = Vec::new();
    for (profile, ds, q, i2, p, pooled) in cases {
        let r = run_case_study(&records, profile.config()).map_err(err)?;
        for (s, &d) in r.studies.iter().zip(&ds) {
            if (s.effect.d - d).abs() > 0.01 {
                failures.push(format!("{profile} study {}: d {:.4} vs {d}", s.index, s.effect.d));
            }
        }
        let h = &r.pooled.heterogeneity;
        let checks = [
            ("Q", h.q, q, 0.05),
            ("I2", h.i_squared, i2, 0.5),
            ("p", h.p_value, p, 0.005),
            ("pooled", r.pooled.pooled_d, pooled, 0.05),
        ];
        for (name, got, want, tol) in checks {
            if (got - want).abs() > tol {
                failures.push(format!("{profile} {name} {got:.4} vs {want} (tol {tol})"));
            }
        }
        if profile == Profile::Table2 {
            let table = [17.79, 18.97, 6.29, 22.35, 10.59, 28.40, 9.57];
            for (s, w) in r.studies.iter().zip(table) {
                if (s.effect.weight - w).abs() > 0.05 {
                    failures.push(format!("table2 study {} weight {:.3} vs {w}", s.index, s.effect.weight));
                }
            }
        }
        summary.push(format!(
            "{profile}: Q {:.4}, I2 {:.3}, p {:.4}, pooled {:.4}",
            h.q, h.i_squared, h.p_value, r.pooled.pooled_d
        ));
    }
    if failures.is_empty() {
        Ok(summary.join("; "))
    } else {
        Err(failures.join("; "))
    }
}

fn symmetry_and_psd() -> Result<String, String> {
    let mut worst = 0.0_f64;
    for n in grid(5, 501) {
        let m = moments_quadrature(n).map_err(err)?;
        worst = worst.max(m.mean_symmetry_defect()).max(m.product_symmetry_defect());
        m.check_psd(1e-12).map_err(err)?;
        optimal_weights(Scenario::S3, &m).map_err(err)?;
    }
    if worst > 1e-9 {
        return Err(format!("quadrature symmetry defect {worst:e}"));
    }
    let mut worst_se = 0.0_f64;
    for n in grid(5, 501) {
        let m = moments_mc(n, 10_000, DEFAULT_SEED).map_err(err)?;
        let tol = 5.0 * std::f64::consts::SQRT_2 * m.std_error;
        worst_se = worst_se.max(m.mean_symmetry_defect().max(m.product_symmetry_defect()) / tol);
        m.check_psd(0.0).map_err(err)?;
    }
    if worst_se > 1.0 {
        return Err(format!("MC symmetry defect exceeds 5 combined SE (ratio {worst_se:.2})"));
    }
    Ok(format!("symmetry quad {worst:.1e}, MC {:.2} of tolerance; PSD all n", worst_se))
}

fn unbiasedness() -> Result<String, String> {
    const T: u64 = 100_000;
    const N: usize = 41;
    let moments = moments_quadrature(N).map_err(err)?;
    let key = derive_key(DEFAULT_SEED, &[0x7562_6961, N as u64]);
    let normal = rand_distr::Normal::new(50.0, 17.0).unwrap();
    let mut weight_sets: Vec<WeightSet> = Vec::new();
    for s in Scenario::ALL {
        weight_sets.push(approx_weight(s, N).map_err(err)?);
        weight_sets.push(optimal_weights(s, &moments).map_err(err)?);
    }
    weight_sets.extend([hozo_weight(N), hozo_unconditional_weight(N), wan_weight(N), bland_weights(N)]);
    let mut sum = vec![0.0; weight_sets.len()];
    let mut sum2 = vec![0.0; weight_sets.len()];
    let mut sample = vec![0.0; N];
    for r in 0..T {
        let mut rng = replicate_rng(key, r);
        for x in sample.iter_mut() {
            *x = rng.sample(normal);
        }
        sample.sort_unstable_by(f64::total_cmp);
        for (k, w) in weight_sets.iter().enumerate() {
            let s = summarize(&sample, w.scenario).map_err(err)?;
            let v = mean_weighted(&s, w).map_err(err)?.value;
            sum[k] += v;
            sum2[k] += v * v;
        }
    }
    let mut worst = 0.0_f64;
    for k in 0..weight_sets.len() {
        let mean = sum[k] / T as f64;
        let se = ((sum2[k] / T as f64 - mean * mean) / (T - 1) as f64).sqrt();
        worst = worst.max((mean - 50.0).abs() / se);
    }
    if worst < 4.0 {
        Ok(format!("unbiased within {worst:.2} SE ({} estimators)", weight_sets.len()))
    } else {
        Err(format!("bias of {worst:.2} SE"))
    }
}

fn random_summary(rng: &mut ChaCha8Rng, scenario: Scenario) -> FiveNumberSummary {
    let n = 4 * rng.random_range(1..60) + 1;
    let mut v: Vec<f64> = (0..5).map(|_| rng.random_range(-100.0..100.0)).collect();
    v.sort_unstable_by(f64::total_cmp);
    FiveNumberSummary::new(
        scenario,
        n,
        scenario.has_extremes().then_some(v[0]),
        scenario.has_quartiles().then_some(v[1]),
        v[2],
        scenario.has_quartiles().then_some(v[3]),
        scenario.has_extremes().then_some(v[4]),
    )
    .unwrap()
}

fn mean_estimates(s: &FiveNumberSummary) -> Result<Vec<f64>, String> {
    let mut out = vec![mean_optimal(s, WeightChoice::Approx).map_err(err)?.value];
    match s.scenario {
        Scenario::S1 => {
            out.push(mean_hozo(s, HozoMode::Thresholded).map_err(err)?.value);
            out.push(mean_hozo(s, HozoMode::Unconditional).map_err(err)?.value);
        }
        Scenario::S2 => out.push(mean_wan_s2(s).map_err(err)?.value),
        Scenario::S3 => out.push(mean_bland(s).map_err(err)?.value),
    }
    Ok(out)
}

fn equivariance_and_convexity() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(DEFAULT_SEED);
    let mut checked = 0;
    for _ in 0..2_000 {
        for scenario in Scenario::ALL {
            let s = random_summary(&mut rng, scenario);
            let c = rng.random_range(-1e3..1e3);
            let k = rng.random_range(1e-3..1e3);
            let t = s.affine(c, k);
            let vals = s.present_values();
            let (lo, hi) = (vals[0], vals[vals.len() - 1]);
            for (x, y) in mean_estimates(&s)?.into_iter().zip(mean_estimates(&t)?) {
                if !(lo <= x && x <= hi) {
                    return Err(format!("estimate {x} outside [{lo}, {hi}]"));
                }
                let scale = (c.abs() + k * x.abs()).max(1.0);
                if (y - (c + k * x)).abs() > 1e-12 * scale {
                    return Err(format!("equivariance: {y} vs {}", c + k * x));
                }
                checked += 1;
            }
            let sd = sd_estimate(&s, SdMethod::Wan).map_err(err)?.value;
            let sd_t = sd_estimate(&t, SdMethod::Wan).map_err(err)?.value;
            if (sd_t - k * sd).abs() > 1e-12 * (k * sd).max(1e-300) {
                return Err(format!("SD equivariance: {sd_t} vs {}", k * sd));
            }
        }
    }
    Ok(format!("{checked} equivariance/convexity checks"))
}

fn minimizer_grid() -> Result<String, String> {
    for n in [5, 25, 101] {
        let m = moments_quadrature(n).map_err(err)?;
        let agg = m.aggregates();
        let w1 = optimal_weights(Scenario::S1, &m).map_err(err)?.mid_range;
        let w2 = optimal_weights(Scenario::S2, &m).map_err(err)?.mid_quartile;
        let w3 = optimal_weights(Scenario::S3, &m).map_err(err)?;
        let (b1, b2, b3) = (mse_s1(&agg, w1), mse_s2(&agg, w2), mse_s3(&agg, w3.mid_range, w3.mid_quartile));
        for i in 0..=100 {
            let u = i as f64 / 100.0;
            if mse_s1(&agg, u) < b1 || mse_s2(&agg, u) < b2 {
                return Err(format!("n={n}: grid point {u} beats optimum"));
            }
            for j in 0..=(100 - i) {
                let v = j as f64 / 100.0;
                if mse_s3(&agg, u, v) < b3 {
                    return Err(format!("n={n}: S3 grid point ({u}, {v}) beats optimum"));
                }
            }
        }
    }
    Ok("optima beat every 0.01 grid point at n = 5, 25, 101".into())
}

fn criterion_6() -> Check {
    let parts = [
        symmetry_and_psd()?,
        unbiasedness()?,
        equivariance_and_convexity()?,
        minimizer_grid()?,
    ];
    Ok(parts.join("; "))
}

type Criterion = (&'static str, fn() -> Check);

fn main() -> ExitCode {
    let criteria: [Criterion; 6] = [
        ("golden weight tables", criterion_1),
        ("asymptotics", criterion_2),
        ("coefficient refits", criterion_3),
        ("simulation", criterion_4),
        ("case study", criterion_5),
        ("property suites", criterion_6),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS criterion {} ({name}) [{secs:.1}s]: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {} ({name}) [{secs:.1}s]: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
