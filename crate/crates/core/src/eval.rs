//! Accuracy reports over validation nodes, stratified by age group, seeds
//! in the neighborhood (SIN), distance to seeds (DTS) and degree.
//!
//! Accuracy counts only validation nodes that received a prediction;
//! `coverage` is the predicted fraction of the validation set.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::diffusion::NodeLabels;
use crate::error::{Error, Result};
use crate::graph::{SocialGraph, TopoMetrics, UNREACHABLE};

/// Inclusive upper bounds of degree buckets; degrees above the last bound
/// land in an overflow bucket.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegreeBuckets(Vec<u32>);

impl Default for DegreeBuckets {
    /// `[1,2]`, `(2,29]`, `(29,48]`, `(48,66]`, `(66,100]`.
    fn default() -> Self {
        DegreeBuckets(vec![2, 29, 48, 66, 100])
    }
}

impl DegreeBuckets {
    pub fn new(bounds: Vec<u32>) -> Result<Self> {
        if bounds.is_empty() || bounds.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("degree bucket bounds must be non-empty and strictly increasing"));
        }
        Ok(DegreeBuckets(bounds))
    }

    pub fn bucket(&self, degree: u32) -> usize {
        self.0.iter().take_while(|&&b| degree > b).count()
    }

    pub fn labels(&self) -> Vec<String> {
        let mut out = Vec::with_capacity(self.0.len() + 1);
        let mut lower = 1;
        for &b in &self.0 {
            out.push(format!("{lower}-{b}"));
            lower = b + 1;
        }
        out.push(format!(">{}", self.0.last().expect("non-empty")));
        out
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Stratum {
    pub label: String,
    /// Validation nodes in the stratum.
    pub population: usize,
    /// Of those, nodes with a prediction.
    pub predicted: usize,
    pub correct: usize,
}

impl Stratum {
    fn new(label: String) -> Self {
        Stratum { label, ..Default::default() }
    }

    pub fn accuracy(&self) -> Option<f64> {
        (self.predicted > 0).then(|| self.correct as f64 / self.predicted as f64)
    }

    fn record(&mut self, hit: Option<bool>) {
        self.population += 1;
        if let Some(h) = hit {
            self.predicted += 1;
            self.correct += usize::from(h);
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub overall: Stratum,
    pub coverage: f64,
    pub by_age_group: Vec<Stratum>,
    pub by_sin: Vec<Stratum>,
    pub by_dts: Vec<Stratum>,
    pub by_degree_bucket: Vec<Stratum>,
    /// Rows follow `by_degree_bucket`, columns follow `by_dts`.
    pub dts_degree_crosstab: Vec<Vec<Stratum>>,
}

fn dts_label(d: u32) -> String {
    if d == UNREACHABLE {
        "unreachable".to_owned()
    } else {
        d.to_string()
    }
}

/// `predictions[x]` is the predicted category of node `x`, `None` when the
/// node was left unassigned.
pub fn evaluate(
    g: &SocialGraph,
    labels: &NodeLabels,
    predictions: &[Option<usize>],
    metrics: &TopoMetrics,
    buckets: &DegreeBuckets,
    category_names: &[String],
) -> Result<EvalReport> {
    let n = g.node_count();
    if predictions.len() != n || labels.validation.len() != n || metrics.dts.len() != n {
        return Err(Error::Dimension("predictions, labels and metrics must cover every node".into()));
    }
    if labels.validation_count() == 0 {
        return Err(Error::invalid("no validation nodes to evaluate"));
    }
    if category_names.len() != labels.categories {
        return Err(Error::Dimension("one category name per category expected".into()));
    }

    let mut overall = Stratum::new("all".into());
    let mut by_age: Vec<Stratum> = category_names.iter().cloned().map(Stratum::new).collect();
    let mut by_sin: BTreeMap<u32, Stratum> = BTreeMap::new();
    let mut by_dts: BTreeMap<u32, Stratum> = BTreeMap::new();
    let mut by_degree: Vec<Stratum> = buckets.labels().into_iter().map(Stratum::new).collect();
    let mut cells: BTreeMap<(usize, u32), Stratum> = BTreeMap::new();

    for x in 0..n {
        let Some(truth) = labels.validation[x] else { continue };
        let hit = predictions[x].map(|p| p == truth);
        let (sin, dts) = (metrics.sin[x], metrics.dts[x]);
        let bucket = buckets.bucket(metrics.degree[x]);
        overall.record(hit);
        by_age[truth].record(hit);
        by_sin.entry(sin).or_insert_with(|| Stratum::new(sin.to_string())).record(hit);
        by_dts.entry(dts).or_insert_with(|| Stratum::new(dts_label(dts))).record(hit);
        by_degree[bucket].record(hit);
        cells.entry((bucket, dts)).or_insert_with(|| Stratum::new(format!("{}|{}", by_degree[bucket].label, dts_label(dts)))).record(hit);
    }

    let dts_keys: Vec<u32> = by_dts.keys().copied().collect();
    let crosstab = (0..by_degree.len())
        .map(|b| {
            dts_keys
                .iter()
                .map(|&d| {
                    cells
                        .remove(&(b, d))
                        .unwrap_or_else(|| Stratum::new(format!("{}|{}", by_degree[b].label, dts_label(d))))
                })
                .collect()
        })
        .collect();

    Ok(EvalReport {
        coverage: overall.predicted as f64 / overall.population as f64,
        overall,
        by_age_group: by_age,
        by_sin: by_sin.into_values().collect(),
        by_dts: by_dts.into_values().collect(),
        by_degree_bucket: by_degree,
        dts_degree_crosstab: crosstab,
    })
}

impl EvalReport {
    /// Long-form CSV `table,bin,population,predicted,correct,accuracy`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["table", "bin", "population", "predicted", "correct", "accuracy"])?;
        let tables: [(&str, &[Stratum]); 5] = [
            ("overall", std::slice::from_ref(&self.overall)),
            ("age_group", &self.by_age_group),
            ("sin", &self.by_sin),
            ("dts", &self.by_dts),
            ("degree", &self.by_degree_bucket),
        ];
        let cross: Vec<Stratum> = self.dts_degree_crosstab.iter().flatten().cloned().collect();
        for (name, rows) in tables.into_iter().chain(std::iter::once(("degree_dts", cross.as_slice()))) {
            for s in rows {
                out.write_record([
                    name.to_owned(),
                    s.label.clone(),
                    s.population.to_string(),
                    s.predicted.to_string(),
                    s.correct.to_string(),
                    s.accuracy().map(|a| format!("{a:.6}")).unwrap_or_default(),
                ])?;
            }
        }
        out.flush()?;
        Ok(())
    }
}

/// Accuracy per method (rows) and PPS fraction `q` (columns).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MethodTable {
    pub qs: Vec<f64>,
    pub rows: Vec<(String, Vec<Option<f64>>)>,
}

impl MethodTable {
    pub fn new(qs: Vec<f64>) -> Self {
        MethodTable { qs, rows: Vec::new() }
    }

    pub fn push(&mut self, method: impl Into<String>, accuracies: Vec<Option<f64>>) -> Result<()> {
        if accuracies.len() != self.qs.len() {
            return Err(Error::Dimension(format!("{} accuracies for {} q values", accuracies.len(), self.qs.len())));
        }
        self.rows.push((method.into(), accuracies));
        Ok(())
    }

    /// CSV `method,q=<q0>,q=<q1>,...`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["method".to_owned()];
        header.extend(self.qs.iter().map(|q| format!("q={q}")));
        out.write_record(&header)?;
        for (m, accs) in &self.rows {
            let mut rec = vec![m.clone()];
            rec.extend(accs.iter().map(|a| a.map(|v| format!("{v:.6}")).unwrap_or_default()));
            out.write_record(&rec)?;
        }
        out.flush()?;
        Ok(())
    }
}
