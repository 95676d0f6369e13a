use serde::{Deserialize, Serialize};

use super::optimizer::{minimize, FitReport, OptimizerOptions};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Penalty {
    L2,
    L1,
}

impl std::str::FromStr for Penalty {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "l1" => Ok(Penalty::L1),
            "l2" => Ok(Penalty::L2),
            other => Err(format!("unknown penalty {other:?}")),
        }
    }
}

/// `‖ω‖₁ + C·Σξ` (L1) or `½ωᵀω + C·Σξ` (L2); intercepts are never penalized.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegConfig {
    pub penalty: Penalty,
    pub c: f64,
}

impl RegConfig {
    pub fn new(penalty: Penalty, c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::invalid(format!("regularization strength must be positive, got {c}")));
        }
        Ok(RegConfig { penalty, c })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    /// Sigmoid on one score; class 1 is the positive label.
    Binary,
    /// Softmax with the last class score pinned at zero.
    Multinomial,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifierModel {
    pub kind: ModelKind,
    pub classes: usize,
    pub config: RegConfig,
    pub feature_names: Vec<String>,
    /// One row per free score: 1 for binary, `classes - 1` for multinomial.
    pub weights: Vec<Vec<f64>>,
    pub intercepts: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trained {
    pub model: ClassifierModel,
    pub report: FitReport,
}

/// Per-user class probabilities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictionSet {
    pub user_ids: Vec<String>,
    pub prob: Vec<Vec<f64>>,
    pub argmax: Vec<usize>,
}

impl PredictionSet {
    pub fn from_rows(user_ids: Vec<String>, prob: Vec<Vec<f64>>) -> Result<Self> {
        if user_ids.len() != prob.len() {
            return Err(Error::Dimension(format!("{} users but {} probability rows", user_ids.len(), prob.len())));
        }
        let argmax = prob.iter().map(|r| argmax(r)).collect();
        Ok(PredictionSet { user_ids, prob, argmax })
    }

    pub fn classes(&self) -> usize {
        self.prob.first().map_or(0, Vec::len)
    }

    /// CSV `user_id,p_0,...,p_{C-1},argmax`.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["user_id".to_owned()];
        header.extend((0..self.classes()).map(|k| format!("p_{k}")));
        header.push("argmax".to_owned());
        out.write_record(&header)?;
        for ((u, row), a) in self.user_ids.iter().zip(&self.prob).zip(&self.argmax) {
            let mut rec = vec![u.clone()];
            rec.extend(row.iter().map(|p| format!("{p:.10}")));
            rec.push(a.to_string());
            out.write_record(&rec)?;
        }
        out.flush()?;
        Ok(())
    }

    /// Reads the layout of [`PredictionSet::write_csv`]; the `argmax` column
    /// is optional and recomputed.
    pub fn read_csv<R: std::io::Read>(r: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
        let header = rdr.headers()?.clone();
        if header.get(0) != Some("user_id") {
            return Err(Error::row(1, "probability CSV must start with user_id"));
        }
        let classes = header.iter().skip(1).take_while(|h| h.starts_with("p_")).count();
        if classes == 0 {
            return Err(Error::row(1, "probability CSV has no p_ columns"));
        }
        let mut users = Vec::new();
        let mut prob = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let line = i as u64 + 2;
            users.push(rec.get(0).unwrap_or_default().to_owned());
            let row = (1..=classes)
                .map(|j| {
                    rec.get(j)
                        .and_then(|v| v.parse::<f64>().ok())
                        .ok_or_else(|| Error::row(line, format!("bad probability in column {j}")))
                })
                .collect::<Result<Vec<f64>>>()?;
            prob.push(row);
        }
        PredictionSet::from_rows(users, prob)
    }
}

/// Index of the largest entry, lowest index on ties.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (k, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = k;
        }
    }
    best
}

pub(crate) struct Design<'a> {
    pub x: &'a [f64],
    pub n: usize,
    pub p: usize,
}

impl<'a> Design<'a> {
    fn row(&self, i: usize) -> &'a [f64] {
        &self.x[i * self.p..(i + 1) * self.p]
    }
}

fn check_inputs(m: &FeatureMatrix, targets: &[usize], classes: usize) -> Result<()> {
    if targets.len() != m.n_rows() {
        return Err(Error::Dimension(format!("{} targets for {} feature rows", targets.len(), m.n_rows())));
    }
    if m.n_rows() == 0 {
        return Err(Error::invalid("no training rows"));
    }
    if let Some(&t) = targets.iter().find(|&&t| t >= classes) {
        return Err(Error::invalid(format!("target {t} out of range for {classes} classes")));
    }
    if m.values().iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("features contain non-finite values"));
    }
    Ok(())
}

fn softplus(t: f64) -> f64 {
    t.max(0.0) + (-t.abs()).exp().ln_1p()
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// Parameter layout `[ω_0..ω_{p-1}, b]`; class 1 maps to `y = +1`.
/// Returns the smooth part of the objective (loss and any L2 term).
pub fn binary_smooth_objective(
    x: &[f64],
    n_features: usize,
    targets: &[usize],
    reg: &RegConfig,
    params: &[f64],
    grad: &mut [f64],
) -> f64 {
    let d = Design { x, n: targets.len(), p: n_features };
    let p = d.p;
    grad.fill(0.0);
    let mut loss = 0.0;
    for i in 0..d.n {
        let xi = d.row(i);
        let y = if targets[i] == 1 { 1.0 } else { -1.0 };
        let z = dot(&params[..p], xi) + params[p];
        loss += softplus(-y * z);
        let coef = -y * sigmoid(-y * z) * reg.c;
        for j in 0..p {
            grad[j] += coef * xi[j];
        }
        grad[p] += coef;
    }
    let mut value = reg.c * loss;
    if reg.penalty == Penalty::L2 {
        for j in 0..p {
            value += 0.5 * params[j] * params[j];
            grad[j] += params[j];
        }
    }
    value
}

/// Parameter layout: for each free class `k < classes - 1`, the block
/// `[ω_k (p values), b_k]`. Returns the smooth part of the objective.
pub fn multinomial_smooth_objective(
    x: &[f64],
    n_features: usize,
    targets: &[usize],
    classes: usize,
    reg: &RegConfig,
    params: &[f64],
    grad: &mut [f64],
) -> f64 {
    let d = Design { x, n: targets.len(), p: n_features };
    let p = d.p;
    let stride = p + 1;
    let free = classes - 1;
    grad.fill(0.0);
    let mut scores = vec![0.0; classes];
    let mut loss = 0.0;
    for i in 0..d.n {
        let xi = d.row(i);
        for k in 0..free {
            let block = &params[k * stride..(k + 1) * stride];
            scores[k] = dot(&block[..p], xi) + block[p];
        }
        scores[free] = 0.0;
        let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = scores.iter().map(|s| (s - max).exp()).sum();
        let lse = max + sum.ln();
        loss += lse - scores[targets[i]];
        for k in 0..free {
            let pk = (scores[k] - lse).exp();
            let coef = reg.c * (pk - if targets[i] == k { 1.0 } else { 0.0 });
            let g = &mut grad[k * stride..(k + 1) * stride];
            for j in 0..p {
                g[j] += coef * xi[j];
            }
            g[p] += coef;
        }
    }
    let mut value = reg.c * loss;
    if reg.penalty == Penalty::L2 {
        for k in 0..free {
            for j in 0..p {
                let w = params[k * stride + j];
                value += 0.5 * w * w;
                grad[k * stride + j] += w;
            }
        }
    }
    value
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn l1_mask(blocks: usize, p: usize, penalty: Penalty) -> Vec<bool> {
    let mut mask = vec![false; blocks * (p + 1)];
    if penalty == Penalty::L1 {
        for k in 0..blocks {
            mask[k * (p + 1)..k * (p + 1) + p].fill(true);
        }
    }
    mask
}

/// Binary logistic regression; `targets` are 0/1 with 1 the positive label.
pub fn train_logistic(m: &FeatureMatrix, targets: &[usize], reg: &RegConfig) -> Result<Trained> {
    train_logistic_with(m, targets, reg, &OptimizerOptions::default())
}

pub fn train_logistic_with(
    m: &FeatureMatrix,
    targets: &[usize],
    reg: &RegConfig,
    opts: &OptimizerOptions,
) -> Result<Trained> {
    check_inputs(m, targets, 2)?;
    let p = m.n_cols();
    let mut params = vec![0.0; p + 1];
    let mask = l1_mask(1, p, reg.penalty);
    let report = minimize(&mut params, &mask, opts, |th, g| {
        binary_smooth_objective(m.values(), p, targets, reg, th, g)
    });
    let model = ClassifierModel {
        kind: ModelKind::Binary,
        classes: 2,
        config: *reg,
        feature_names: m.column_names().to_vec(),
        weights: vec![params[..p].to_vec()],
        intercepts: vec![params[p]],
    };
    Ok(Trained { model, report })
}

/// Multinomial logistic regression over `classes ≥ 2` categories.
pub fn train_multinomial(m: &FeatureMatrix, targets: &[usize], classes: usize, reg: &RegConfig) -> Result<Trained> {
    train_multinomial_with(m, targets, classes, reg, &OptimizerOptions::default())
}

pub fn train_multinomial_with(
    m: &FeatureMatrix,
    targets: &[usize],
    classes: usize,
    reg: &RegConfig,
    opts: &OptimizerOptions,
) -> Result<Trained> {
    if classes < 2 {
        return Err(Error::invalid("multinomial regression needs at least two classes"));
    }
    check_inputs(m, targets, classes)?;
    let p = m.n_cols();
    let free = classes - 1;
    let mut params = vec![0.0; free * (p + 1)];
    let mask = l1_mask(free, p, reg.penalty);
    let report = minimize(&mut params, &mask, opts, |th, g| {
        multinomial_smooth_objective(m.values(), p, targets, classes, reg, th, g)
    });
    let model = ClassifierModel {
        kind: ModelKind::Multinomial,
        classes,
        config: *reg,
        feature_names: m.column_names().to_vec(),
        weights: (0..free).map(|k| params[k * (p + 1)..k * (p + 1) + p].to_vec()).collect(),
        intercepts: (0..free).map(|k| params[k * (p + 1) + p]).collect(),
    };
    Ok(Trained { model, report })
}

impl ClassifierModel {
    /// Probabilities for one feature row already aligned to `feature_names`.
    pub fn probabilities(&self, x: &[f64]) -> Vec<f64> {
        match self.kind {
            ModelKind::Binary => {
                let p1 = sigmoid(dot(&self.weights[0], x) + self.intercepts[0]);
                vec![1.0 - p1, p1]
            }
            ModelKind::Multinomial => {
                let mut scores: Vec<f64> =
                    self.weights.iter().zip(&self.intercepts).map(|(w, b)| dot(w, x) + b).collect();
                scores.push(0.0);
                softmax(&scores)
            }
        }
    }

    /// Count of nonzero feature weights.
    pub fn nonzero_weights(&self) -> usize {
        self.weights.iter().flatten().filter(|w| **w != 0.0).count()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: ClassifierModel = serde_json::from_str(s)?;
        let free = match m.kind {
            ModelKind::Binary => 1,
            ModelKind::Multinomial => m.classes.saturating_sub(1),
        };
        if m.weights.len() != free
            || m.intercepts.len() != free
            || m.weights.iter().any(|w| w.len() != m.feature_names.len())
        {
            return Err(Error::Dimension("model weight shape does not match its classes and features".into()));
        }
        Ok(m)
    }
}

/// Softmax with max-shift.
pub fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let sum: f64 = exp.iter().sum();
    exp.into_iter().map(|e| e / sum).collect()
}

/// Applies `model` to every row of `m`, matching columns by name.
pub fn predict(model: &ClassifierModel, m: &FeatureMatrix) -> Result<PredictionSet> {
    let cols = model
        .feature_names
        .iter()
        .map(|name| {
            m.column_index(name)
                .ok_or_else(|| Error::Dimension(format!("feature matrix has no column {name:?}")))
        })
        .collect::<Result<Vec<usize>>>()?;
    let mut x = vec![0.0; cols.len()];
    let prob: Vec<Vec<f64>> = (0..m.n_rows())
        .map(|i| {
            let row = m.row(i);
            for (slot, &c) in x.iter_mut().zip(&cols) {
                *slot = row[c];
            }
            model.probabilities(&x)
        })
        .collect();
    PredictionSet::from_rows(m.user_ids().to_vec(), prob)
}
