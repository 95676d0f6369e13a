//! Population Pyramid Scaling: collapse probability rows to hard labels so
//! that the labeled counts follow a target category distribution.
//!
//! All `(user, category, p)` triples are sorted by `p` descending (ties by
//! lower row index, then lower category) and scanned once; a user is given
//! category `k` if still unassigned and `k` has not reached its quota.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::classify::PredictionSet;
use crate::error::{Error, Result};

/// Age pyramid used when no seed distribution is available: `<25`,
/// `25-34`, `35-49`, `>=50`.
pub const DEFAULT_PYRAMID: [f64; 4] = [0.121, 0.3545, 0.3745, 0.15];

const REMAINDER_SCALE: f64 = 1e9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuotaSpec {
    pub q: f64,
    pub target_distribution: Vec<f64>,
    /// `N = round(q · population)`.
    pub total: usize,
    pub quotas: Vec<usize>,
}

/// Largest-remainder apportionment of `round(q·population)` over
/// `distribution`; remainder ties go to the lower category.
pub fn compute_quotas(population: usize, q: f64, distribution: &[f64]) -> Result<QuotaSpec> {
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::invalid(format!("q must lie in (0, 1], got {q}")));
    }
    if distribution.is_empty() {
        return Err(Error::invalid("target distribution is empty"));
    }
    if distribution.iter().any(|f| !(f.is_finite() && *f >= 0.0)) {
        return Err(Error::invalid("target fractions must be finite and non-negative"));
    }
    let sum: f64 = distribution.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(format!("target fractions sum to {sum}, not 1")));
    }
    let total = (q * population as f64).round() as usize;
    let exact: Vec<f64> = distribution.iter().map(|f| f * total as f64).collect();
    let mut quotas: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let assigned: usize = quotas.iter().sum();
    // remainders equal up to rounding count as ties
    let key: Vec<i64> = exact.iter().map(|e| ((e - e.floor()) * REMAINDER_SCALE).round() as i64).collect();
    let mut order: Vec<usize> = (0..distribution.len()).collect();
    order.sort_by(|&a, &b| key[b].cmp(&key[a]).then(a.cmp(&b)));
    for &k in order.iter().take(total.saturating_sub(assigned)) {
        quotas[k] += 1;
    }
    Ok(QuotaSpec { q, target_distribution: distribution.to_vec(), total, quotas })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PpsAssignment {
    pub user_ids: Vec<String>,
    pub assigned: Vec<Option<usize>>,
    /// `p_{i,k}` of the triple that made the assignment.
    pub confidence: Vec<Option<f64>>,
    pub counts: Vec<usize>,
    /// Unfilled quota per category.
    pub shortfall: Vec<usize>,
}

impl PpsAssignment {
    pub fn assigned_count(&self) -> usize {
        self.counts.iter().sum()
    }

    /// CSV `user_id,category,confidence`; unassigned users have empty cells.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["user_id", "category", "confidence"])?;
        for ((u, a), c) in self.user_ids.iter().zip(&self.assigned).zip(&self.confidence) {
            out.write_record([
                u.clone(),
                a.map(|k| k.to_string()).unwrap_or_default(),
                c.map(|p| format!("{p:.10}")).unwrap_or_default(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Greedy quota-constrained collapse of `pred` under `spec`.
pub fn pps_assign(pred: &PredictionSet, spec: &QuotaSpec) -> Result<PpsAssignment> {
    let n = pred.user_ids.len();
    let c = spec.quotas.len();
    if spec.total > n {
        return Err(Error::invalid(format!("quota total {} exceeds population {n}", spec.total)));
    }
    if let Some(i) = pred.prob.iter().position(|r| r.len() != c) {
        return Err(Error::Dimension(format!("row {i} has {} classes, quotas have {c}", pred.prob[i].len())));
    }
    if pred.prob.iter().flatten().any(|p| !p.is_finite()) {
        return Err(Error::invalid("probabilities must be finite"));
    }

    let mut triples: Vec<(usize, usize, f64)> = Vec::with_capacity(n * c);
    for (i, row) in pred.prob.iter().enumerate() {
        for (k, &p) in row.iter().enumerate() {
            triples.push((i, k, p));
        }
    }
    triples.sort_unstable_by(|a, b| b.2.total_cmp(&a.2).then(a.0.cmp(&b.0)).then(a.1.cmp(&b.1)));

    let mut assigned = vec![None; n];
    let mut confidence = vec![None; n];
    let mut counts = vec![0usize; c];
    let mut placed = 0;
    for (i, k, p) in triples {
        if placed == spec.total {
            break;
        }
        if assigned[i].is_none() && counts[k] < spec.quotas[k] {
            assigned[i] = Some(k);
            confidence[i] = Some(p);
            counts[k] += 1;
            placed += 1;
        }
    }
    let shortfall = spec.quotas.iter().zip(&counts).map(|(q, c)| q - c).collect();
    Ok(PpsAssignment { user_ids: pred.user_ids.clone(), assigned, confidence, counts, shortfall })
}

/// Reads `user_id,category,confidence`; empty categories are unassigned.
pub fn read_assignments_csv<R: Read>(r: R) -> Result<Vec<(String, Option<usize>)>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i as u64 + 2;
        let user = rec.get(0).ok_or_else(|| Error::row(line, "missing user_id"))?.to_owned();
        let cat = match rec.get(1).unwrap_or("") {
            "" => None,
            v => Some(v.parse().map_err(|_| Error::row(line, format!("bad category {v:?}")))?),
        };
        out.push((user, cat));
    }
    Ok(out)
}

/// Pyramid CSV `category,fraction`, categories `0..C` in any order.
pub fn read_pyramid_csv<R: Read>(r: R) -> Result<Vec<f64>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let mut rows: Vec<(usize, f64)> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i as u64 + 2;
        let k = rec.get(0).and_then(|v| v.parse().ok()).ok_or_else(|| Error::row(line, "bad category"))?;
        let f = rec.get(1).and_then(|v| v.parse().ok()).ok_or_else(|| Error::row(line, "bad fraction"))?;
        rows.push((k, f));
    }
    rows.sort_by_key(|r| r.0);
    if rows.iter().enumerate().any(|(i, r)| r.0 != i) {
        return Err(Error::invalid("pyramid categories must be 0..C without gaps"));
    }
    Ok(rows.into_iter().map(|r| r.1).collect())
}

pub fn write_pyramid_csv<W: Write>(fractions: &[f64], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["category", "fraction"])?;
    for (k, f) in fractions.iter().enumerate() {
        out.write_record([k.to_string(), f.to_string()])?;
    }
    out.flush()?;
    Ok(())
}
