use serde::{Deserialize, Serialize};

use super::studentized::{ptukey, qtukey};
use crate::error::{Error, Result};

/// One pairwise comparison; `meandiff = mean(group2) - mean(group1)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TukeyPair {
    pub group1: usize,
    pub group2: usize,
    pub meandiff: f64,
    pub p_adj: f64,
    pub lower: f64,
    pub upper: f64,
    pub reject: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TukeyResult {
    pub fwer: f64,
    pub df: f64,
    pub mse: f64,
    /// Studentized-range critical value at `1 - fwer`.
    pub q_crit: f64,
    pub pairs: Vec<TukeyPair>,
}

/// Tukey–Kramer honest significant difference over all pairs `i < j`.
pub fn tukey_hsd(groups: &[Vec<f64>], fwer: f64) -> Result<TukeyResult> {
    let k = groups.len();
    if k < 2 {
        return Err(Error::invalid("Tukey HSD needs at least two groups"));
    }
    if let Some(i) = groups.iter().position(|g| g.len() < 2) {
        return Err(Error::invalid(format!("group {i} has fewer than two values")));
    }
    if !(fwer > 0.0 && fwer < 1.0) {
        return Err(Error::invalid(format!("fwer must lie in (0, 1), got {fwer}")));
    }
    if groups.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::invalid("Tukey HSD input contains non-finite values"));
    }

    let means: Vec<f64> = groups.iter().map(|g| g.iter().sum::<f64>() / g.len() as f64).collect();
    let total: usize = groups.iter().map(Vec::len).sum();
    let df = (total - k) as f64;
    let ss: f64 = groups
        .iter()
        .zip(&means)
        .map(|(g, m)| g.iter().map(|v| (v - m).powi(2)).sum::<f64>())
        .sum();
    let mse = ss / df;
    let q_crit = qtukey(1.0 - fwer, k, df);

    let mut pairs = Vec::with_capacity(k * (k - 1) / 2);
    for i in 0..k {
        for j in i + 1..k {
            let meandiff = means[j] - means[i];
            let se = (mse / 2.0 * (1.0 / groups[i].len() as f64 + 1.0 / groups[j].len() as f64)).sqrt();
            let half = q_crit * se;
            let p_adj = if se > 0.0 {
                1.0 - ptukey(meandiff.abs() / se, k, df)
            } else if meandiff == 0.0 {
                1.0
            } else {
                0.0
            };
            let (lower, upper) = (meandiff - half, meandiff + half);
            pairs.push(TukeyPair {
                group1: i,
                group2: j,
                meandiff,
                p_adj: p_adj.clamp(0.0, 1.0),
                lower,
                upper,
                reject: lower > 0.0 || upper < 0.0,
            });
        }
    }
    Ok(TukeyResult { fwer, df, mse, q_crit, pairs })
}
