//! Standardized mean differences, heterogeneity and random-effects pooling.
//!
//! Effects are oriented as controls minus cases.

mod io;

pub use io::{parse_studies, write_effects_csv, TABLE1_CSV};

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma_ur;

use crate::error::{Error, Result, StudyIssue};
use crate::estimators::{mean_hozo, mean_optimal, sd_estimate, sd_hozo_range, sd_wan_range, HozoMode, SdMethod, WeightChoice};
use crate::summary::FiveNumberSummary;

const Z95: f64 = 1.959963984540054;

/// Mean, SD and size of one study arm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Arm {
    pub mean: f64,
    pub sd: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Payload {
    /// `[min, median, max]` per arm.
    FiveNumber { cases: [f64; 3], controls: [f64; 3] },
    MeanSd {
        mean_cases: f64,
        sd_cases: f64,
        mean_controls: f64,
        sd_controls: f64,
    },
    /// Odds ratio of cases vs. controls with its 95% CI.
    OddsRatio { or: f64, lo: f64, hi: f64 },
    /// `[mean, min, max]` per arm.
    MeanRange { cases: [f64; 3], controls: [f64; 3] },
}

impl Payload {
    pub fn type_name(&self) -> &'static str {
        match self {
            Payload::FiveNumber { .. } => "fivenum",
            Payload::MeanSd { .. } => "meansd",
            Payload::OddsRatio { .. } => "or",
            Payload::MeanRange { .. } => "meanrange",
        }
    }

    /// Exchanges the roles of cases and controls.
    pub fn swapped(&self) -> Payload {
        match *self {
            Payload::FiveNumber { cases, controls } => Payload::FiveNumber {
                cases: controls,
                controls: cases,
            },
            Payload::MeanSd {
                mean_cases,
                sd_cases,
                mean_controls,
                sd_controls,
            } => Payload::MeanSd {
                mean_cases: mean_controls,
                sd_cases: sd_controls,
                mean_controls: mean_cases,
                sd_controls: sd_cases,
            },
            Payload::OddsRatio { or, lo, hi } => Payload::OddsRatio {
                or: 1.0 / or,
                lo: 1.0 / hi,
                hi: 1.0 / lo,
            },
            Payload::MeanRange { cases, controls } => Payload::MeanRange {
                cases: controls,
                controls: cases,
            },
        }
    }

    /// Multiplies every raw value by `s > 0`. Odds ratios are unchanged.
    pub fn scaled(&self, s: f64) -> Payload {
        let m = |a: [f64; 3]| a.map(|x| x * s);
        match *self {
            Payload::FiveNumber { cases, controls } => Payload::FiveNumber {
                cases: m(cases),
                controls: m(controls),
            },
            Payload::MeanSd {
                mean_cases,
                sd_cases,
                mean_controls,
                sd_controls,
            } => Payload::MeanSd {
                mean_cases: mean_cases * s,
                sd_cases: sd_cases * s,
                mean_controls: mean_controls * s,
                sd_controls: sd_controls * s,
            },
            p @ Payload::OddsRatio { .. } => p,
            Payload::MeanRange { cases, controls } => Payload::MeanRange {
                cases: m(cases),
                controls: m(controls),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRecord {
    pub index: usize,
    pub label: String,
    pub n_cases: usize,
    pub n_controls: usize,
    pub payload: Payload,
    pub note: String,
}

impl StudyRecord {
    pub fn swapped(&self) -> StudyRecord {
        StudyRecord {
            n_cases: self.n_controls,
            n_controls: self.n_cases,
            payload: self.payload.swapped(),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StudyEffect {
    pub d: f64,
    /// Variance of `d` (not its standard error).
    pub var_d: f64,
    /// `1 / var_d`.
    pub weight: f64,
    pub ci95: (f64, f64),
}

impl StudyEffect {
    fn new(d: f64, var_d: f64) -> Result<Self> {
        if !(d.is_finite() && var_d.is_finite() && var_d > 0.0) {
            return Err(Error::InternalConsistency(format!(
                "effect {d} with variance {var_d}"
            )));
        }
        let half = Z95 * var_d.sqrt();
        Ok(Self {
            d,
            var_d,
            weight: 1.0 / var_d,
            ci95: (d - half, d + half),
        })
    }
}

/// `((N−2)/(N−4)) · (N/(n1 n2) + d²/(2N))` with `N = n1 + n2`.
pub fn d_variance(d: f64, n_cases: usize, n_controls: usize) -> Result<f64> {
    let total = n_cases + n_controls;
    if n_cases < 2 || n_controls < 2 || total <= 4 {
        return Err(Error::InvalidInput(format!(
            "arm sizes {n_cases}/{n_controls} too small for a variance"
        )));
    }
    let (n1, n2, nn) = (n_cases as f64, n_controls as f64, total as f64);
    Ok((nn - 2.0) / (nn - 4.0) * (nn / (n1 * n2) + d * d / (2.0 * nn)))
}

/// Cohen's d of controls minus cases with the pooled SD.
pub fn cohens_d(cases: Arm, controls: Arm) -> Result<StudyEffect> {
    for arm in [cases, controls] {
        if !(arm.sd > 0.0 && arm.sd.is_finite()) {
            return Err(Error::InvalidInput(format!("non-positive SD {}", arm.sd)));
        }
        if arm.n < 2 {
            return Err(Error::InvalidInput(format!("arm size {} < 2", arm.n)));
        }
        if !arm.mean.is_finite() {
            return Err(Error::InvalidInput(format!("non-finite mean {}", arm.mean)));
        }
    }
    let (nt, nc) = (cases.n as f64, controls.n as f64);
    let pooled = (((nc - 1.0) * controls.sd * controls.sd + (nt - 1.0) * cases.sd * cases.sd)
        / (nc + nt - 2.0))
        .sqrt();
    let d = (controls.mean - cases.mean) / pooled;
    StudyEffect::new(d, d_variance(d, cases.n, controls.n)?)
}

/// `d = ln(OR) · √3 / π`, with the sample-size variance.
pub fn odds_ratio_to_d(or: f64, ci: (f64, f64), n_cases: usize, n_controls: usize) -> Result<StudyEffect> {
    let (lo, hi) = ci;
    if !(or > 0.0 && or.is_finite()) {
        return Err(Error::InvalidInput(format!("odds ratio {or} must be positive")));
    }
    if !(lo > 0.0 && lo < hi && hi.is_finite()) {
        return Err(Error::InvalidInput(format!("odds-ratio interval ({lo}, {hi}) is invalid")));
    }
    let d = or.ln() * 3f64.sqrt() / PI;
    StudyEffect::new(d, d_variance(d, n_cases, n_controls)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Heterogeneity {
    pub q: f64,
    pub df: usize,
    pub p_value: f64,
    /// Percent.
    pub i_squared: f64,
}

/// `max(0, (Q − df)/Q) · 100`.
pub fn i_squared(q: f64, df: usize) -> f64 {
    if q > 0.0 {
        ((q - df as f64) / q).max(0.0) * 100.0
    } else {
        0.0
    }
}

/// Upper tail of chi-square with `df` degrees of freedom at `x`.
pub fn chi_square_sf(x: f64, df: usize) -> f64 {
    if x <= 0.0 {
        1.0
    } else {
        gamma_ur(df as f64 / 2.0, x / 2.0)
    }
}

fn fixed_mean(effects: &[StudyEffect]) -> (f64, f64) {
    let sw: f64 = effects.iter().map(|e| e.weight).sum();
    let mean = effects.iter().map(|e| e.weight * e.d).sum::<f64>() / sw;
    (mean, sw)
}

/// Cochran's Q with df, p-value and I².
pub fn heterogeneity(effects: &[StudyEffect]) -> Result<Heterogeneity> {
    if effects.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "{} effect(s); heterogeneity needs at least 2",
            effects.len()
        )));
    }
    let (mean, _) = fixed_mean(effects);
    let q: f64 = effects.iter().map(|e| e.weight * (e.d - mean).powi(2)).sum();
    let df = effects.len() - 1;
    Ok(Heterogeneity {
        q,
        df,
        p_value: chi_square_sf(q, df),
        i_squared: i_squared(q, df),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PooledEffect {
    pub heterogeneity: Heterogeneity,
    pub tau_squared: f64,
    pub pooled_d: f64,
    pub pooled_se: f64,
    pub pooled_ci95: (f64, f64),
}

/// DerSimonian–Laird random-effects pooling.
pub fn pool_random_effects(effects: &[StudyEffect]) -> Result<PooledEffect> {
    let het = heterogeneity(effects)?;
    let (_, sw) = fixed_mean(effects);
    let sw2: f64 = effects.iter().map(|e| e.weight * e.weight).sum();
    let tau_squared = ((het.q - het.df as f64) / (sw - sw2 / sw)).max(0.0);
    let star: Vec<f64> = effects.iter().map(|e| 1.0 / (e.var_d + tau_squared)).collect();
    let s_star: f64 = star.iter().sum();
    let pooled_d = effects.iter().zip(&star).map(|(e, w)| w * e.d).sum::<f64>() / s_star;
    let pooled_se = 1.0 / s_star.sqrt();
    Ok(PooledEffect {
        heterogeneity: het,
        tau_squared,
        pooled_d,
        pooled_se,
        pooled_ci95: (pooled_d - Z95 * pooled_se, pooled_d + Z95 * pooled_se),
    })
}

/// How summary payloads are turned into means.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeanRule {
    Hozo,
    HozoAsApplied,
    OptimalApprox,
}

impl MeanRule {
    pub fn as_str(self) -> &'static str {
        match self {
            MeanRule::Hozo => "hozo",
            MeanRule::HozoAsApplied => "hozo_as_applied",
            MeanRule::OptimalApprox => "optimal_approx",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseStudyConfig {
    pub mean: MeanRule,
    pub sd: SdMethod,
}

/// Named mean/SD pairings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    /// Unconditional `(a + 2m + b)/4` mean, range-rule SD.
    Table2,
    /// Approximate optimal mean, quantile-based SD.
    Table3,
}

impl Profile {
    pub fn config(self) -> CaseStudyConfig {
        match self {
            Profile::Table2 => CaseStudyConfig {
                mean: MeanRule::HozoAsApplied,
                sd: SdMethod::Hozo,
            },
            Profile::Table3 => CaseStudyConfig {
                mean: MeanRule::OptimalApprox,
                sd: SdMethod::Wan,
            },
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Profile::Table2 => "table2",
            Profile::Table3 => "table3",
        }
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "table2" => Ok(Profile::Table2),
            "table3" => Ok(Profile::Table3),
            other => Err(Error::InvalidInput(format!("unknown profile {other:?}"))),
        }
    }
}

/// One converted study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyResult {
    pub index: usize,
    pub label: String,
    pub n_cases: usize,
    pub n_controls: usize,
    /// Arm estimates fed to Cohen's d; absent for odds-ratio studies.
    pub cases: Option<Arm>,
    pub controls: Option<Arm>,
    pub effect: StudyEffect,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaResult {
    pub config: CaseStudyConfig,
    pub studies: Vec<StudyResult>,
    pub pooled: PooledEffect,
}

fn five_number_arm(v: [f64; 3], n: usize, config: CaseStudyConfig) -> Result<Arm> {
    let s = FiveNumberSummary::s1(v[0], v[1], v[2], n)?;
    let mean = match config.mean {
        MeanRule::Hozo => mean_hozo(&s, HozoMode::Thresholded)?,
        MeanRule::HozoAsApplied => mean_hozo(&s, HozoMode::Unconditional)?,
        MeanRule::OptimalApprox => mean_optimal(&s, WeightChoice::Approx)?,
    };
    Ok(Arm {
        mean: mean.value,
        sd: sd_estimate(&s, config.sd)?.value,
        n,
    })
}

fn mean_range_arm(v: [f64; 3], n: usize, sd: SdMethod) -> Result<Arm> {
    let [mean, min, max] = v;
    if !(min <= mean && mean <= max) {
        return Err(Error::InvalidInput(format!("mean {mean} outside range [{min}, {max}]")));
    }
    let sd = match sd {
        SdMethod::Wan => sd_wan_range(min, max, n)?,
        SdMethod::Hozo => sd_hozo_range(min, None, max, n)?,
    };
    Ok(Arm { mean, sd, n })
}

/// Converts one record to an effect size.
pub fn study_effect(record: &StudyRecord, config: CaseStudyConfig) -> Result<StudyResult> {
    let (nt, nc) = (record.n_cases, record.n_controls);
    let (cases, controls) = match record.payload {
        Payload::FiveNumber { cases, controls } => (
            Some(five_number_arm(cases, nt, config)?),
            Some(five_number_arm(controls, nc, config)?),
        ),
        Payload::MeanSd {
            mean_cases,
            sd_cases,
            mean_controls,
            sd_controls,
        } => (
            Some(Arm {
                mean: mean_cases,
                sd: sd_cases,
                n: nt,
            }),
            Some(Arm {
                mean: mean_controls,
                sd: sd_controls,
                n: nc,
            }),
        ),
        Payload::MeanRange { cases, controls } => (
            Some(mean_range_arm(cases, nt, config.sd)?),
            Some(mean_range_arm(controls, nc, config.sd)?),
        ),
        Payload::OddsRatio { .. } => (None, None),
    };
    let effect = match (record.payload, cases, controls) {
        (Payload::OddsRatio { or, lo, hi }, _, _) => odds_ratio_to_d(or, (lo, hi), nt, nc)?,
        (_, Some(t), Some(c)) => cohens_d(t, c)?,
        _ => unreachable!("every arm payload yields both arms"),
    };
    Ok(StudyResult {
        index: record.index,
        label: record.label.clone(),
        n_cases: nt,
        n_controls: nc,
        cases,
        controls,
        effect,
    })
}

/// Converts every study, then pools. Any per-study failure aborts the run
/// with all diagnostics collected.
pub fn run_case_study(records: &[StudyRecord], config: CaseStudyConfig) -> Result<MetaResult> {
    if records.is_empty() {
        return Err(Error::InvalidInput("no studies".into()));
    }
    let mut studies = Vec::with_capacity(records.len());
    let mut issues = Vec::new();
    for r in records {
        match study_effect(r, config) {
            Ok(s) => studies.push(s),
            Err(e) => issues.push(StudyIssue {
                index: r.index,
                message: e.to_string(),
            }),
        }
    }
    if !issues.is_empty() {
        return Err(Error::Studies(issues));
    }
    let effects: Vec<StudyEffect> = studies.iter().map(|s| s.effect).collect();
    Ok(MetaResult {
        config,
        studies,
        pooled: pool_random_effects(&effects)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table1() -> Vec<StudyRecord> {
        parse_studies(TABLE1_CSV.as_bytes()).unwrap()
    }

    #[test]
    fn cohens_d_examples() {
        let e = cohens_d(
            Arm { mean: 69.5, sd: 24.5, n: 51 },
            Arm { mean: 95.5, sd: 29.25, n: 51 },
        )
        .unwrap();
        assert!((e.d - 0.9637).abs() < 5e-5, "{}", e.d);
        assert!((e.weight * e.var_d - 1.0).abs() < 1e-15);
        let half = Z95 * e.var_d.sqrt();
        assert!((e.ci95.0 - (e.d - half)).abs() < 1e-15 && (e.ci95.1 - (e.d + half)).abs() < 1e-15);

        let e = cohens_d(
            Arm { mean: 46.5, sd: 18.5, n: 22 },
            Arm { mean: 52.25, sd: 15.75, n: 23 },
        )
        .unwrap();
        assert!((e.d - 0.3353).abs() < 5e-5, "{}", e.d);

        let same = Arm { mean: 3.0, sd: 1.0, n: 10 };
        assert_eq!(cohens_d(same, same).unwrap().d, 0.0);
        assert!(cohens_d(Arm { sd: 0.0, ..same }, same).is_err());
        assert!(cohens_d(Arm { n: 1, ..same }, same).is_err());
    }

    #[test]
    fn odds_ratio_examples() {
        let e = odds_ratio_to_d(2.9, (1.3, 6.5), 103, 42).unwrap();
        assert!((e.d - 0.5882).abs() < 2e-3, "{}", e.d);
        assert_eq!(odds_ratio_to_d(1.0, (0.5, 2.0), 10, 10).unwrap().d, 0.0);
        let unit = (PI / 3f64.sqrt()).exp();
        assert!((odds_ratio_to_d(unit, (1.0, 9.0), 10, 10).unwrap().d - 1.0).abs() < 1e-15);
        assert!(odds_ratio_to_d(0.0, (0.5, 2.0), 10, 10).is_err());
        assert!(odds_ratio_to_d(2.0, (2.5, 2.0), 10, 10).is_err());
    }

    #[test]
    fn heterogeneity_trivial() {
        let e = StudyEffect::new(0.4, 0.05).unwrap();
        let h = heterogeneity(&[e, e, e]).unwrap();
        assert_eq!((h.q, h.df, h.i_squared, h.p_value), (0.0, 2, 0.0, 1.0));
        let p = pool_random_effects(&[e, e]).unwrap();
        assert_eq!(p.tau_squared, 0.0);
        assert!((p.pooled_d - 0.4).abs() < 1e-15);
        assert!(heterogeneity(&[e]).is_err());
    }

    #[test]
    fn chi_square_tail() {
        // Exact for df = 2: exp(-x/2).
        assert!((chi_square_sf(3.0, 2) - (-1.5f64).exp()).abs() < 1e-14);
        assert!((chi_square_sf(3.841458820694124, 1) - 0.05).abs() < 1e-12);
    }

    #[test]
    fn sign_flip() {
        let records = table1();
        let flipped: Vec<_> = records.iter().map(StudyRecord::swapped).collect();
        for profile in [Profile::Table2, Profile::Table3] {
            let a = run_case_study(&records, profile.config()).unwrap();
            let b = run_case_study(&flipped, profile.config()).unwrap();
            for (x, y) in a.studies.iter().zip(&b.studies) {
                assert!((x.effect.d + y.effect.d).abs() < 1e-12);
            }
            assert!((a.pooled.pooled_d + b.pooled.pooled_d).abs() < 1e-12);
            assert!((a.pooled.heterogeneity.q - b.pooled.heterogeneity.q).abs() < 1e-10);
            assert!((a.pooled.heterogeneity.i_squared - b.pooled.heterogeneity.i_squared).abs() < 1e-8);
        }
    }

    #[test]
    fn scale_invariance() {
        let records = table1();
        for s in [0.01, 2.5, 1000.0] {
            for r in &records {
                let scaled = StudyRecord {
                    payload: r.payload.scaled(s),
                    ..r.clone()
                };
                for profile in [Profile::Table2, Profile::Table3] {
                    let a = study_effect(r, profile.config()).unwrap().effect.d;
                    let b = study_effect(&scaled, profile.config()).unwrap().effect.d;
                    assert!((a - b).abs() < 1e-12, "study {} scale {s}", r.index);
                }
            }
        }
    }

    #[test]
    fn empty_and_bad_records() {
        assert!(matches!(
            run_case_study(&[], Profile::Table3.config()),
            Err(Error::InvalidInput(_))
        ));
        let mut records = table1();
        records[1].payload = Payload::MeanSd {
            mean_cases: 1.0,
            sd_cases: -1.0,
            mean_controls: 2.0,
            sd_controls: 1.0,
        };
        records[4].n_cases = 1;
        match run_case_study(&records, Profile::Table3.config()) {
            Err(Error::Studies(issues)) => {
                assert_eq!(issues.iter().map(|i| i.index).collect::<Vec<_>>(), vec![2, 5]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn hozo_sd_on_mean_range_needs_median_for_small_arms() {
        let r = StudyRecord {
            index: 1,
            label: "x".into(),
            n_cases: 12,
            n_controls: 30,
            payload: Payload::MeanRange {
                cases: [5.0, 1.0, 10.0],
                controls: [6.0, 2.0, 12.0],
            },
            note: String::new(),
        };
        assert!(study_effect(&r, Profile::Table2.config()).is_err());
        assert!(study_effect(&r, Profile::Table3.config()).is_ok());
    }
}
