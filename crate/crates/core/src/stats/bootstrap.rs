use rand::Rng as _;

use crate::error::{Error, Result};
use crate::features::quantile;
use crate::rng;

/// Means of `resamples` samples of size `values.len()` drawn with
/// replacement. Draw `j` of resample `r` is `values[rng.random_range(0..m)]`
/// from a single generator seeded with `seed`, consumed in order.
pub fn bootstrap_means(values: &[f64], resamples: usize, seed: u64) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::invalid("bootstrap needs at least one value"));
    }
    if resamples == 0 {
        return Err(Error::invalid("bootstrap needs at least one resample"));
    }
    let m = values.len();
    let mut rng = rng::seeded(seed);
    let mut means = Vec::with_capacity(resamples);
    for _ in 0..resamples {
        let mut sum = 0.0;
        for _ in 0..m {
            sum += values[rng.random_range(0..m)];
        }
        means.push(sum / m as f64);
    }
    Ok(means)
}

/// Central `level` range of a bootstrap distribution, e.g. `0.95` gives the
/// 2.5% and 97.5% quantiles.
pub fn percentile_range(means: &[f64], level: f64) -> Option<(f64, f64)> {
    if means.is_empty() || !(0.0..=1.0).contains(&level) {
        return None;
    }
    let mut sorted = means.to_vec();
    sorted.sort_by(f64::total_cmp);
    let tail = (1.0 - level) / 2.0;
    Some((quantile(&sorted, tail)?, quantile(&sorted, 1.0 - tail)?))
}
