use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::logistic::{predict, train_logistic, train_multinomial, ClassifierModel, ModelKind, Penalty, RegConfig};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::rng;

/// One grid cell. `k = None` keeps every column.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub penalty: Penalty,
    pub c: f64,
    pub k: Option<usize>,
}

/// Cartesian product of the given axes.
pub fn grid(cs: &[f64], ks: &[Option<usize>], penalties: &[Penalty]) -> Vec<GridPoint> {
    let mut out = Vec::new();
    for &penalty in penalties {
        for &c in cs {
            for &k in ks {
                out.push(GridPoint { penalty, c, k });
            }
        }
    }
    out
}

/// `C ∈ {0.1, 0.3, 1, 3, 10}`, `k ∈ {10, 30, all}`, both penalties.
pub fn default_grid() -> Vec<GridPoint> {
    grid(&[0.1, 0.3, 1.0, 3.0, 10.0], &[Some(10), Some(30), None], &[Penalty::L1, Penalty::L2])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridEvaluation {
    pub penalty: Penalty,
    pub c: f64,
    /// Columns actually used after clamping to the matrix width.
    pub k: usize,
    pub validation_accuracy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub best: GridEvaluation,
    /// Model of the best cell, fit on the training split.
    pub model: ClassifierModel,
    pub evaluations: Vec<GridEvaluation>,
    pub train_rows: usize,
    pub validation_rows: usize,
}

/// One-way ANOVA F statistic per column over `rows`; for two classes this
/// is the squared pooled two-sample t statistic. Constant columns score 0.
pub fn separation_scores(m: &FeatureMatrix, rows: &[usize], targets: &[usize], classes: usize) -> Vec<f64> {
    let n = rows.len() as f64;
    let mut counts = vec![0usize; classes];
    for &r in rows {
        counts[targets[r]] += 1;
    }
    let present = counts.iter().filter(|&&c| c > 0).count();
    (0..m.n_cols())
        .map(|j| {
            let mut sums = vec![0.0; classes];
            let mut total = 0.0;
            for &r in rows {
                let v = m.value(r, j);
                sums[targets[r]] += v;
                total += v;
            }
            let grand = total / n;
            let mut between = 0.0;
            for k in 0..classes {
                if counts[k] > 0 {
                    let mk = sums[k] / counts[k] as f64;
                    between += counts[k] as f64 * (mk - grand).powi(2);
                }
            }
            let mut within = 0.0;
            for &r in rows {
                let k = targets[r];
                within += (m.value(r, j) - sums[k] / counts[k] as f64).powi(2);
            }
            let df_between = present.saturating_sub(1) as f64;
            let df_within = n - present as f64;
            if df_between == 0.0 || df_within <= 0.0 || between == 0.0 {
                0.0
            } else if within == 0.0 {
                f64::INFINITY
            } else {
                (between / df_between) / (within / df_within)
            }
        })
        .collect()
}

/// Column indices ordered by descending score, ties by index.
pub fn rank_features(scores: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    idx
}

/// Seeded split of `0..n` into (train, validation) with
/// `round(split·n)` training rows, each side non-empty.
pub fn train_validation_split(n: usize, split: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(split > 0.0 && split < 1.0) {
        return Err(Error::invalid(format!("split must lie in (0, 1), got {split}")));
    }
    let n_train = ((split * n as f64).round() as usize).clamp(1, n.saturating_sub(1));
    if n < 2 {
        return Err(Error::invalid("need at least two rows to split"));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng::seeded(seed));
    let mut train = idx[..n_train].to_vec();
    let mut val = idx[n_train..].to_vec();
    train.sort_unstable();
    val.sort_unstable();
    Ok((train, val))
}

fn fit(kind: ModelKind, m: &FeatureMatrix, targets: &[usize], classes: usize, reg: &RegConfig) -> Result<ClassifierModel> {
    Ok(match kind {
        ModelKind::Binary => train_logistic(m, targets, reg)?.model,
        ModelKind::Multinomial => train_multinomial(m, targets, classes, reg)?.model,
    })
}

/// Exhaustive search; the winner maximizes validation accuracy, then
/// prefers smaller `k`, smaller `C`, and L2 over L1.
pub fn grid_search(
    m: &FeatureMatrix,
    targets: &[usize],
    kind: ModelKind,
    classes: usize,
    grid: &[GridPoint],
    split: f64,
    seed: u64,
) -> Result<GridResult> {
    if grid.is_empty() {
        return Err(Error::invalid("empty parameter grid"));
    }
    if targets.len() != m.n_rows() {
        return Err(Error::Dimension(format!("{} targets for {} feature rows", targets.len(), m.n_rows())));
    }
    if kind == ModelKind::Binary && classes != 2 {
        return Err(Error::invalid("binary models need exactly two classes"));
    }
    let (train, val) = train_validation_split(m.n_rows(), split, seed)?;
    let ranked = rank_features(&separation_scores(m, &train, targets, classes));
    let all_cols = m.n_cols();

    let mut cells: Vec<(Penalty, f64, usize)> = Vec::new();
    for g in grid {
        RegConfig::new(g.penalty, g.c)?;
        let k = g.k.unwrap_or(all_cols).min(all_cols);
        if k == 0 {
            return Err(Error::invalid("feature count k must be positive"));
        }
        if !cells.iter().any(|c| c.0 == g.penalty && c.1.to_bits() == g.c.to_bits() && c.2 == k) {
            cells.push((g.penalty, g.c, k));
        }
    }
    // total order: smaller k, smaller C, L2 before L1
    cells.sort_by(|a, b| a.2.cmp(&b.2).then(a.1.total_cmp(&b.1)).then(a.0.cmp(&b.0)));

    let train_targets: Vec<usize> = train.iter().map(|&r| targets[r]).collect();
    let val_targets: Vec<usize> = val.iter().map(|&r| targets[r]).collect();
    let fitted: Vec<Result<(GridEvaluation, ClassifierModel)>> = cells
        .par_iter()
        .map(|&(penalty, c, k)| {
            let mut cols = ranked[..k].to_vec();
            cols.sort_unstable();
            let reg = RegConfig { penalty, c };
            let model = fit(kind, &m.select(&train, &cols), &train_targets, classes, &reg)?;
            let pred = predict(&model, &m.select(&val, &cols))?;
            let hits = pred.argmax.iter().zip(&val_targets).filter(|(a, b)| a == b).count();
            let validation_accuracy = hits as f64 / val.len() as f64;
            Ok((GridEvaluation { penalty, c, k, validation_accuracy }, model))
        })
        .collect();

    let mut evaluations = Vec::with_capacity(fitted.len());
    let mut best: Option<(GridEvaluation, ClassifierModel)> = None;
    for r in fitted {
        let (eval, model) = r?;
        evaluations.push(eval.clone());
        // cells are already in tie-break order, so only strict gains win
        if best.as_ref().is_none_or(|b| eval.validation_accuracy > b.0.validation_accuracy) {
            best = Some((eval, model));
        }
    }
    let (best, model) = best.expect("grid is non-empty");
    Ok(GridResult { best, model, evaluations, train_rows: train.len(), validation_rows: val.len() })
}
