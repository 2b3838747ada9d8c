//! Convergence diagnostics and ensemble statistics.
use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::ensemble::EnsembleTable;
use crate::error::{Error, Result};
use crate::metrics::sorted_median;
use crate::partition::PlanHash;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PsrfReport {
    pub value: f64,
    pub chains: usize,
    pub length: usize,
    /// Within-chain variance was zero; `value` is 1 if the chains also agree
    /// and infinite otherwise.
    pub degenerate: bool,
}

/// Classic Gelman-Rubin potential scale reduction factor.
///
/// With `n` draws per chain, `B = n * var(chain means)`, `W = mean(within-chain
/// variances)` (both with `n - 1`-style denominators), `V = (n-1)/n * W + B/n`,
/// and the result is `sqrt(V / W)`.
pub fn psrf(series: &[&[f64]]) -> Result<PsrfReport> {
    let m = series.len();
    if m < 2 {
        return Err(Error::Metric("PSRF needs at least two chains".into()));
    }
    let n = series[0].len();
    if series.iter().any(|s| s.len() != n) {
        return Err(Error::Metric("PSRF chains must have equal length".into()));
    }
    if n < 2 {
        return Err(Error::Metric(format!("PSRF needs at least 2 draws per chain, got {n}")));
    }
    let nf = n as f64;
    let means: Vec<f64> = series.iter().map(|s| s.iter().sum::<f64>() / nf).collect();
    let grand = means.iter().sum::<f64>() / m as f64;
    let between = nf * means.iter().map(|x| (x - grand).powi(2)).sum::<f64>() / (m as f64 - 1.0);
    let within = series
        .iter()
        .zip(&means)
        .map(|(s, mu)| s.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (nf - 1.0))
        .sum::<f64>()
        / m as f64;
    if within == 0.0 {
        let value = if between == 0.0 { 1.0 } else { f64::INFINITY };
        return Ok(PsrfReport { value, chains: m, length: n, degenerate: true });
    }
    let pooled = (nf - 1.0) / nf * within + between / nf;
    Ok(PsrfReport { value: (pooled / within).sqrt(), chains: m, length: n, degenerate: false })
}

/// PSRF after dropping `burn_in` draws and keeping every `thin`-th draw.
pub fn psrf_with(series: &[&[f64]], burn_in: usize, thin: usize) -> Result<PsrfReport> {
    let thin = thin.max(1);
    let trimmed: Vec<Vec<f64>> = series
        .iter()
        .map(|s| s.iter().skip(burn_in).step_by(thin).copied().collect())
        .collect();
    let views: Vec<&[f64]> = trimmed.iter().map(Vec::as_slice).collect();
    psrf(&views)
}

/// Percentage of `column` strictly below `value`, with ties counted half.
pub fn percentile_of(value: f64, column: &[f64]) -> f64 {
    if column.is_empty() {
        return f64::NAN;
    }
    let below = column.iter().filter(|&&x| x < value).count() as f64;
    let equal = column.iter().filter(|&&x| x == value).count() as f64;
    100.0 * (below + 0.5 * equal) / column.len() as f64
}

/// Median of an unsorted column.
pub fn median(column: &[f64]) -> f64 {
    let mut sorted = column.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted_median(&sorted)
}

/// First quartile, median and third quartile by linear interpolation.
pub fn quartiles(column: &[f64]) -> [f64; 3] {
    let mut sorted = column.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q = |p: f64| {
        let pos = p * (sorted.len() - 1) as f64;
        let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
        sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
    };
    [q(0.25), q(0.5), q(0.75)]
}

/// Per-rank median of the sorted share vectors across the ensemble.
pub fn sorted_share_medians(table: &EnsembleTable, election: &str) -> Result<Vec<f64>> {
    if table.is_empty() {
        return Err(Error::Metric("empty ensemble".into()));
    }
    (1..=table.k)
        .map(|rank| Ok(median(&table.column(&format!("{election}.share_{rank}"))?)))
        .collect()
}

/// Percentage of records whose plan hash repeats an earlier one.
pub fn duplicate_rate<I: IntoIterator<Item = PlanHash>>(hashes: I) -> f64 {
    let mut seen = HashSet::new();
    let mut total = 0usize;
    for h in hashes {
        seen.insert(h);
        total += 1;
    }
    if total == 0 {
        return 0.0;
    }
    100.0 * (1.0 - seen.len() as f64 / total as f64)
}

/// Largest pairwise total-variation distance between the normalized
/// histograms of the given samples on `bins` shared bins.
pub fn multi_start_density_check(samples: &[&[f64]], bins: usize) -> Result<f64> {
    if samples.len() < 2 {
        return Err(Error::Metric("density check needs at least two samples".into()));
    }
    if bins == 0 || samples.iter().any(|s| s.is_empty()) {
        return Err(Error::Metric("density check needs bins and nonempty samples".into()));
    }
    let lo = samples.iter().flat_map(|s| s.iter()).copied().fold(f64::INFINITY, f64::min);
    let hi = samples.iter().flat_map(|s| s.iter()).copied().fold(f64::NEG_INFINITY, f64::max);
    let width = (hi - lo) / bins as f64;
    let histograms: Vec<Vec<f64>> = samples
        .iter()
        .map(|s| {
            let mut h = vec![0.0; bins];
            for &x in s.iter() {
                let b = if width > 0.0 { (((x - lo) / width) as usize).min(bins - 1) } else { 0 };
                h[b] += 1.0;
            }
            h.iter_mut().for_each(|c| *c /= s.len() as f64);
            h
        })
        .collect();
    let mut worst: f64 = 0.0;
    for i in 0..histograms.len() {
        for j in i + 1..histograms.len() {
            let tv = 0.5
                * histograms[i].iter().zip(&histograms[j]).map(|(a, b)| (a - b).abs()).sum::<f64>();
            worst = worst.max(tv);
        }
    }
    Ok(worst)
}
