//! Deterministic order-statistic moments by adaptive quadrature.
//!
//! First moments and `E(Z_(i)^2)` integrate against the marginal density of
//! `Z_(i)`; cross moments integrate the joint density of `(Z_(i), Z_(j))`
//! over `x < y` as an outer integral in `x` of an inner integral in `y`.
//! All densities are evaluated in log space with log-gamma normalising
//! constants, and every integral is clipped to the window where the
//! relevant marginal density is within `e^-LOG_WINDOW` of its peak.

use libm::lgamma as ln_gamma;

use super::moments::{Backend, OrderStatMoments};
use super::normal::{interval_prob, ln_cdf, ln_pdf, ln_sf};
use crate::error::{Error, Result};
use crate::integrate::adaptive;
use crate::summary::summary_ranks;

pub const MAX_QUADRATURE_N: usize = 501;

const DOMAIN: f64 = 10.0;
const LOG_WINDOW: f64 = 60.0;
const OUTER_TOL: f64 = 1e-10;
const INNER_TOL: f64 = 1e-12;
const MAX_PANELS: usize = 400;
/// Floor for the reported error of a quadrature entry.
const ERROR_FLOOR: f64 = 1e-9;

struct Marginal {
    n: usize,
    rank: usize,
    log_coef: f64,
}

impl Marginal {
    fn new(n: usize, rank: usize) -> Self {
        let log_coef = ln_gamma(n as f64 + 1.0) - ln_gamma(rank as f64) - ln_gamma((n - rank) as f64 + 1.0);
        Marginal { n, rank, log_coef }
    }

    fn ln_density(&self, x: f64) -> f64 {
        let lower = (self.rank - 1) as f64;
        let upper = (self.n - self.rank) as f64;
        let mut v = self.log_coef + ln_pdf(x);
        if lower > 0.0 {
            v += lower * ln_cdf(x);
        }
        if upper > 0.0 {
            v += upper * ln_sf(x);
        }
        v
    }

    /// Interval outside of which the density is negligible.
    fn window(&self) -> (f64, f64) {
        // The density is log-concave, so golden-section search finds the mode.
        let (mut lo, mut hi) = (-DOMAIN, DOMAIN);
        let g = 0.5 * (5.0_f64.sqrt() - 1.0);
        let mut x1 = hi - g * (hi - lo);
        let mut x2 = lo + g * (hi - lo);
        let (mut f1, mut f2) = (self.ln_density(x1), self.ln_density(x2));
        while hi - lo > 1e-9 {
            if f1 < f2 {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + g * (hi - lo);
                f2 = self.ln_density(x2);
            } else {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - g * (hi - lo);
                f1 = self.ln_density(x1);
            }
        }
        let mode = 0.5 * (lo + hi);
        let cut = self.ln_density(mode) - LOG_WINDOW;
        let edge = |mut inside: f64, mut outside: f64| {
            if self.ln_density(outside) >= cut {
                return outside;
            }
            for _ in 0..80 {
                let mid = 0.5 * (inside + outside);
                if self.ln_density(mid) >= cut {
                    inside = mid;
                } else {
                    outside = mid;
                }
            }
            outside
        };
        (edge(mode, -DOMAIN), edge(mode, DOMAIN))
    }
}

fn moment_1d(m: &Marginal, window: (f64, f64), power: i32) -> (f64, f64) {
    let r = adaptive(
        |x| x.powi(power) * m.ln_density(x).exp(),
        window.0,
        window.1,
        16,
        OUTER_TOL,
        MAX_PANELS,
    );
    (r.value, r.error)
}

/// `E(Z_(i) Z_(j))` for ranks `i < j`.
fn cross_moment(n: usize, ri: usize, rj: usize, wi: (f64, f64), wj: (f64, f64)) -> (f64, f64) {
    let log_coef = ln_gamma(n as f64 + 1.0)
        - ln_gamma(ri as f64)
        - ln_gamma((rj - ri) as f64)
        - ln_gamma((n - rj) as f64 + 1.0);
    let below = (ri - 1) as f64;
    let between = (rj - ri - 1) as f64;
    let above = (n - rj) as f64;

    let mut inner_error = 0.0_f64;
    let outer = adaptive(
        |x| {
            let lo = x.max(wj.0);
            if lo >= wj.1 {
                return 0.0;
            }
            let mut base = log_coef + ln_pdf(x);
            if below > 0.0 {
                base += below * ln_cdf(x);
            }
            let inner = adaptive(
                |y| {
                    let mut v = base + ln_pdf(y);
                    if between > 0.0 {
                        let p = interval_prob(x, y);
                        if p <= 0.0 {
                            return 0.0;
                        }
                        v += between * p.ln();
                    }
                    if above > 0.0 {
                        v += above * ln_sf(y);
                    }
                    y * v.exp()
                },
                lo,
                wj.1,
                4,
                INNER_TOL,
                MAX_PANELS,
            );
            inner_error = inner_error.max(inner.error);
            x * inner.value
        },
        wi.0,
        wi.1,
        16,
        OUTER_TOL,
        MAX_PANELS,
    );
    let span = wi.1 - wi.0;
    (outer.value, outer.error + inner_error * span * wi.0.abs().max(wi.1.abs()))
}

/// Moments of the five summary order statistics by numerical integration.
///
/// Supports `n = 4Q + 1` with `5 <= n <= 501`.
pub fn moments_quadrature(n: usize) -> Result<OrderStatMoments> {
    if n > MAX_QUADRATURE_N {
        return Err(Error::Unsupported(format!(
            "quadrature supports n <= {MAX_QUADRATURE_N}, got {n}"
        )));
    }
    let ranks = summary_ranks(n).map_err(|e| match e {
        Error::ScenarioShape(msg) if n < 5 => Error::Unsupported(msg),
        other => other,
    })?;
    let marginals: Vec<Marginal> = ranks.iter().map(|&r| Marginal::new(n, r)).collect();
    let windows: Vec<(f64, f64)> = marginals.iter().map(Marginal::window).collect();

    let mut means = [0.0; 5];
    let mut mean_errors = [0.0; 5];
    let mut products = [[0.0; 5]; 5];
    let mut product_errors = [[0.0; 5]; 5];
    for i in 0..5 {
        let (v, e) = moment_1d(&marginals[i], windows[i], 1);
        means[i] = v;
        mean_errors[i] = e.max(ERROR_FLOOR);
        let (v, e) = moment_1d(&marginals[i], windows[i], 2);
        products[i][i] = v;
        product_errors[i][i] = e.max(ERROR_FLOOR);
    }
    for i in 0..5 {
        for j in (i + 1)..5 {
            let (v, e) = cross_moment(n, ranks[i], ranks[j], windows[i], windows[j]);
            products[i][j] = v;
            products[j][i] = v;
            product_errors[i][j] = e.max(ERROR_FLOOR);
            product_errors[j][i] = product_errors[i][j];
        }
    }
    OrderStatMoments::from_parts(
        n,
        means,
        products,
        mean_errors,
        product_errors,
        Backend::Quadrature,
        None,
    )
}
