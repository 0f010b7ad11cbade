//! Least-squares fits of the closed-form weight curves.
//!
//! Each curve has two coefficients. The fit scans a coarse grid of
//! coefficient pairs, then polishes the best pair with damped Gauss–Newton.

use serde::{Deserialize, Serialize};

use super::WeightSet;
use crate::error::{Error, Result};
use crate::summary::Scenario;

const MIN_POINTS: usize = 4;
const GRID_STEPS: usize = 160;
const MAX_ITERATIONS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitModel {
    /// `w = K/(K+1)` with `K(n) = c1 n^c2`.
    PowerOdds,
    /// `w = 0.7 + c1 n^c2`.
    BaselinePower,
    /// `w1 = c1/(c1 + n^c2)` and `w2 = 0.7 − c3 / n^c4`.
    TwoWeight,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitCoefficients {
    pub scenario: Scenario,
    pub model: FitModel,
    pub c1: f64,
    pub c2: f64,
    pub c3: Option<f64>,
    pub c4: Option<f64>,
    /// Sum of squared weight errors over the grid.
    pub residual: f64,
    pub points: usize,
    pub iterations: usize,
}

impl FitCoefficients {
    /// Evaluates the fitted curve(s) at `n`: `(w1, w2)`, with `w2 = 0` for S1
    /// and the single weight in `w1` for S2.
    pub fn evaluate(&self, n: f64) -> (f64, f64) {
        match self.model {
            FitModel::PowerOdds => (power_odds(n, [self.c1, self.c2]), 0.0),
            FitModel::BaselinePower => (baseline_power(n, [self.c1, self.c2]), 0.0),
            FitModel::TwoWeight => (
                saturating(n, [self.c1, self.c2]),
                baseline_decay(n, [self.c3.unwrap_or(0.0), self.c4.unwrap_or(0.0)]),
            ),
        }
    }
}

fn power_odds(n: f64, c: [f64; 2]) -> f64 {
    let k = c[0] * n.powf(c[1]);
    k / (k + 1.0)
}

fn baseline_power(n: f64, c: [f64; 2]) -> f64 {
    0.7 + c[0] * n.powf(c[1])
}

fn saturating(n: f64, c: [f64; 2]) -> f64 {
    c[0] / (c[0] + n.powf(c[1]))
}

fn baseline_decay(n: f64, c: [f64; 2]) -> f64 {
    0.7 - c[0] / n.powf(c[1])
}

/// Search box for one two-coefficient curve: `c1` log-spaced, `c2` linear.
struct Curve {
    eval: fn(f64, [f64; 2]) -> f64,
    c1: (f64, f64),
    c2: (f64, f64),
}

struct CurveFit {
    coef: [f64; 2],
    residual: f64,
    iterations: usize,
}

fn residual(curve: &Curve, data: &[(f64, f64)], c: [f64; 2]) -> f64 {
    data.iter()
        .map(|&(n, w)| {
            let r = (curve.eval)(n, c) - w;
            r * r
        })
        .sum()
}

fn fit_curve(curve: &Curve, data: &[(f64, f64)]) -> Result<CurveFit> {
    let mut best = ([0.0; 2], f64::INFINITY);
    let (l1, h1) = (curve.c1.0.ln(), curve.c1.1.ln());
    for i in 0..=GRID_STEPS {
        let c1 = (l1 + (h1 - l1) * i as f64 / GRID_STEPS as f64).exp();
        for j in 0..=GRID_STEPS {
            let c2 = curve.c2.0 + (curve.c2.1 - curve.c2.0) * j as f64 / GRID_STEPS as f64;
            let r = residual(curve, data, [c1, c2]);
            if r < best.1 {
                best = ([c1, c2], r);
            }
        }
    }

    let (mut c, mut res) = best;
    for it in 1..=MAX_ITERATIONS {
        // Central-difference Jacobian of the residual vector.
        let mut jtj = [[0.0; 2]; 2];
        let mut jtr = [0.0; 2];
        for &(n, w) in data {
            let r = (curve.eval)(n, c) - w;
            let mut g = [0.0; 2];
            for k in 0..2 {
                let h = 1e-7 * c[k].abs().max(1e-3);
                let mut cp = c;
                cp[k] += h;
                let mut cm = c;
                cm[k] -= h;
                g[k] = ((curve.eval)(n, cp) - (curve.eval)(n, cm)) / (2.0 * h);
            }
            for a in 0..2 {
                jtr[a] += g[a] * r;
                for b in 0..2 {
                    jtj[a][b] += g[a] * g[b];
                }
            }
        }
        let det = jtj[0][0] * jtj[1][1] - jtj[0][1] * jtj[1][0];
        if !(det.abs() > 0.0) {
            break;
        }
        let step = [
            -(jtr[0] * jtj[1][1] - jtj[0][1] * jtr[1]) / det,
            -(jtj[0][0] * jtr[1] - jtj[1][0] * jtr[0]) / det,
        ];
        let mut scale = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let trial = [c[0] + scale * step[0], c[1] + scale * step[1]];
            let r = residual(curve, data, trial);
            if r.is_finite() && r <= res {
                c = trial;
                res = r;
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        let small = (0..2).all(|k| (scale * step[k]).abs() <= 1e-10 * (1.0 + c[k].abs()));
        if !accepted || small {
            return Ok(CurveFit {
                coef: c,
                residual: res,
                iterations: it,
            });
        }
    }
    Err(Error::NotConverged {
        iterations: MAX_ITERATIONS,
        residual: res,
        coefficients: c.to_vec(),
    })
}

/// Fits the closed-form curve for `scenario` to a grid of weight sets.
pub fn fit_power_law(grid: &[WeightSet], scenario: Scenario) -> Result<FitCoefficients> {
    let params = if scenario == Scenario::S3 { 4 } else { 2 };
    if grid.len() < MIN_POINTS {
        return Err(Error::Underdetermined {
            points: grid.len(),
            params,
        });
    }
    if let Some(bad) = grid.iter().find(|w| w.scenario != scenario) {
        return Err(Error::InvalidInput(format!(
            "grid row for n = {} is scenario {}, expected {scenario}",
            bad.n, bad.scenario
        )));
    }
    let column = |f: fn(&WeightSet) -> f64| -> Vec<(f64, f64)> {
        grid.iter().map(|w| (w.n as f64, f(w))).collect()
    };
    match scenario {
        Scenario::S1 => {
            let fit = fit_curve(
                &Curve {
                    eval: power_odds,
                    c1: (0.05, 50.0),
                    c2: (-2.0, 0.0),
                },
                &column(|w| w.mid_range),
            )?;
            Ok(two_coefficient(scenario, FitModel::PowerOdds, fit, grid.len()))
        }
        Scenario::S2 => {
            let fit = fit_curve(
                &Curve {
                    eval: baseline_power,
                    c1: (0.005, 10.0),
                    c2: (-3.0, 0.0),
                },
                &column(|w| w.mid_quartile),
            )?;
            Ok(two_coefficient(scenario, FitModel::BaselinePower, fit, grid.len()))
        }
        Scenario::S3 => {
            let first = fit_curve(
                &Curve {
                    eval: saturating,
                    c1: (0.05, 50.0),
                    c2: (0.0, 2.0),
                },
                &column(|w| w.mid_range),
            )?;
            let second = fit_curve(
                &Curve {
                    eval: baseline_decay,
                    c1: (0.005, 10.0),
                    c2: (0.0, 3.0),
                },
                &column(|w| w.mid_quartile),
            )?;
            Ok(FitCoefficients {
                scenario,
                model: FitModel::TwoWeight,
                c1: first.coef[0],
                c2: first.coef[1],
                c3: Some(second.coef[0]),
                c4: Some(second.coef[1]),
                residual: first.residual + second.residual,
                points: grid.len(),
                iterations: first.iterations + second.iterations,
            })
        }
    }
}

fn two_coefficient(scenario: Scenario, model: FitModel, fit: CurveFit, points: usize) -> FitCoefficients {
    FitCoefficients {
        scenario,
        model,
        c1: fit.coef[0],
        c2: fit.coef[1],
        c3: None,
        c4: None,
        residual: fit.residual,
        points,
        iterations: fit.iterations,
    }
}
