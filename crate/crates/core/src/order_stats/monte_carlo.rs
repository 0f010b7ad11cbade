//! Monte Carlo estimates of order-statistic moments.

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::moments::{Backend, OrderStatMoments};
use crate::error::{Error, Result};
use crate::rng::{derive_key, replicate_rng};
use crate::summary::quarter_index;

pub const MIN_REPLICATES: u64 = 10_000;
pub const DEFAULT_REPLICATES: u64 = 2_000_000;

/// Replicates per work unit. Fixed so the reduction order never depends on
/// the number of worker threads.
const BLOCK: u64 = 8192;

#[derive(Clone, Default)]
struct Sums {
    count: u64,
    z: [f64; 5],
    z2: [f64; 5],
    zz: [[f64; 5]; 5],
    zz2: [[f64; 5]; 5],
}

impl Sums {
    fn add(&mut self, v: &[f64; 5]) {
        self.count += 1;
        for i in 0..5 {
            self.z[i] += v[i];
            self.z2[i] += v[i] * v[i];
            for j in i..5 {
                let p = v[i] * v[j];
                self.zz[i][j] += p;
                self.zz2[i][j] += p * p;
            }
        }
    }

    fn merge(mut self, other: &Sums) -> Sums {
        self.count += other.count;
        for i in 0..5 {
            self.z[i] += other.z[i];
            self.z2[i] += other.z2[i];
            for j in i..5 {
                self.zz[i][j] += other.zz[i][j];
                self.zz2[i][j] += other.zz2[i][j];
            }
        }
        self
    }
}

/// Picks `[min, q1, median, q3, max]` out of an unsorted sample of size
/// `4Q + 1` by partial selection.
pub(crate) fn select_summary(buf: &mut [f64], q: usize) -> [f64; 5] {
    let (left, median, right) = buf.select_nth_unstable_by(2 * q, f64::total_cmp);
    let median = *median;
    let (low, q1, _) = left.select_nth_unstable_by(q, f64::total_cmp);
    let min = low.iter().copied().fold(*q1, f64::min);
    let q1 = *q1;
    let (_, q3, high) = right.select_nth_unstable_by(q - 1, f64::total_cmp);
    let max = high.iter().copied().fold(*q3, f64::max);
    [min, q1, median, *q3, max]
}

fn run_block(key: u64, n: usize, q: usize, start: u64, end: u64) -> Sums {
    let mut sums = Sums::default();
    let mut buf = vec![0.0; n];
    for r in start..end {
        let mut rng = replicate_rng(key, r);
        for x in buf.iter_mut() {
            *x = StandardNormal.sample(&mut rng);
        }
        sums.add(&select_summary(&mut buf, q));
    }
    sums
}

/// Moments of the five summary order statistics from `replicates`
/// independent standard-normal samples of size `n`.
///
/// Replicate `r` draws from the counter-based stream `(seed, n, r)`, so the
/// result is bit-identical for any number of rayon workers.
pub fn moments_mc(n: usize, replicates: u64, seed: u64) -> Result<OrderStatMoments> {
    let q = quarter_index(n)?;
    if replicates < MIN_REPLICATES {
        return Err(Error::InvalidInput(format!(
            "Monte Carlo moments need at least {MIN_REPLICATES} replicates, got {replicates}"
        )));
    }
    let key = derive_key(seed, &[0x6f72_6473, n as u64]);
    let blocks = replicates.div_ceil(BLOCK);
    let partial: Vec<Sums> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let start = b * BLOCK;
            run_block(key, n, q, start, (start + BLOCK).min(replicates))
        })
        .collect();
    let sums = partial.iter().fold(Sums::default(), Sums::merge);

    let t = sums.count as f64;
    let se = |sum: f64, sum_sq: f64| {
        let mean = sum / t;
        ((sum_sq / t - mean * mean).max(0.0) / (t - 1.0)).sqrt()
    };
    let mut means = [0.0; 5];
    let mut mean_errors = [0.0; 5];
    let mut products = [[0.0; 5]; 5];
    let mut product_errors = [[0.0; 5]; 5];
    for i in 0..5 {
        means[i] = sums.z[i] / t;
        mean_errors[i] = se(sums.z[i], sums.z2[i]);
        for j in i..5 {
            products[i][j] = sums.zz[i][j] / t;
            products[j][i] = products[i][j];
            product_errors[i][j] = se(sums.zz[i][j], sums.zz2[i][j]);
            product_errors[j][i] = product_errors[i][j];
        }
    }
    OrderStatMoments::from_parts(
        n,
        means,
        products,
        mean_errors,
        product_errors,
        Backend::MonteCarlo,
        Some(replicates),
    )
}
