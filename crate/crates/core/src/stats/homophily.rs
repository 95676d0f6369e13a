use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::graph::SocialGraph;
use crate::labels::LabelStore;

/// `log10` value used for empty cells of the log-difference matrix.
pub fn default_log_floor() -> f64 {
    0.5f64.log10()
}

/// Dense row-major square matrix indexed by age offset from `min_age`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SquareMatrix {
    size: usize,
    values: Vec<f64>,
}

impl SquareMatrix {
    pub fn zeros(size: usize) -> Self {
        SquareMatrix { size, values: vec![0.0; size * size] }
    }

    pub fn from_fn(size: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut m = SquareMatrix::zeros(size);
        for i in 0..size {
            for j in 0..size {
                m.values[i * size + j] = f(i, j);
            }
        }
        m
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.size + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.size..(i + 1) * self.size]
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (0..self.size).all(|i| (0..i).all(|j| (self.get(i, j) - self.get(j, i)).abs() <= tol))
    }

    fn add(&mut self, i: usize, j: usize, v: f64) {
        self.values[i * self.size + j] += v;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgeRegression {
    pub slope: f64,
    pub intercept: f64,
    pub r: f64,
    pub pairs: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HomophilyReport {
    /// Age of row/column 0; rows cover `min_age..min_age + size`.
    pub min_age: u32,
    /// Labeled graph nodes per age.
    pub population: Vec<u64>,
    pub labeled_nodes: u64,
    pub labeled_edges: u64,
    /// Each labeled edge counted at `(i, j)` and `(j, i)`.
    pub comm: SquareMatrix,
    pub null: SquareMatrix,
    pub log_diff: SquareMatrix,
    pub log_floor: f64,
    /// Links per absolute age difference, `delta_curve[d] = Σ_{|i-j|=d} C_ij`.
    pub delta_curve: Vec<u64>,
    /// Least squares of callee age on caller age over both orientations.
    pub regression: Option<AgeRegression>,
    pub warnings: Vec<String>,
}

impl HomophilyReport {
    pub fn ages(&self) -> Vec<u32> {
        (0..self.population.len() as u32).map(|i| self.min_age + i).collect()
    }
}

pub fn homophily_matrices(g: &SocialGraph, labels: &LabelStore) -> HomophilyReport {
    homophily_matrices_with(g, labels, default_log_floor())
}

pub fn homophily_matrices_with(g: &SocialGraph, labels: &LabelStore, log_floor: f64) -> HomophilyReport {
    let age: Vec<Option<u32>> = g
        .nodes()
        .map(|x| labels.get(g.external_id(x)).and_then(|u| u.age))
        .collect();
    let labeled_edges: Vec<(u32, u32)> = g
        .edges()
        .filter_map(|(x, y)| Some((age[x.index()]?, age[y.index()]?)))
        .collect();

    let (min_age, max_age) = match (age.iter().flatten().min(), age.iter().flatten().max()) {
        (Some(&lo), Some(&hi)) => (lo, hi),
        _ => (0, 0),
    };
    if labeled_edges.is_empty() {
        return HomophilyReport {
            min_age,
            population: Vec::new(),
            labeled_nodes: age.iter().flatten().count() as u64,
            labeled_edges: 0,
            comm: SquareMatrix::zeros(0),
            null: SquareMatrix::zeros(0),
            log_diff: SquareMatrix::zeros(0),
            log_floor,
            delta_curve: Vec::new(),
            regression: None,
            warnings: vec!["no edge joins two age-labeled users".to_owned()],
        };
    }

    let size = (max_age - min_age + 1) as usize;
    let mut population = vec![0u64; size];
    for a in age.iter().flatten() {
        population[(a - min_age) as usize] += 1;
    }
    let mut comm = SquareMatrix::zeros(size);
    let mut delta_curve = vec![0u64; size];
    for &(a, b) in &labeled_edges {
        let (i, j) = ((a - min_age) as usize, (b - min_age) as usize);
        comm.add(i, j, 1.0);
        comm.add(j, i, 1.0);
        delta_curve[i.abs_diff(j)] += 2;
    }

    let labeled_nodes: u64 = population.iter().sum();
    let links = 2.0 * labeled_edges.len() as f64;
    let share: Vec<f64> = population.iter().map(|&c| c as f64 / labeled_nodes as f64).collect();
    let null = SquareMatrix::from_fn(size, |i, j| share[i] * share[j] * links);
    let log_diff = log_difference(&comm, &null, log_floor);

    let mut warnings = Vec::new();
    let regression = age_regression(&labeled_edges);
    if regression.is_none() {
        warnings.push("all linked users share one age; regression undefined".to_owned());
    }

    HomophilyReport {
        min_age,
        population,
        labeled_nodes,
        labeled_edges: labeled_edges.len() as u64,
        comm,
        null,
        log_diff,
        log_floor,
        delta_curve,
        regression,
        warnings,
    }
}

/// `log10 C - log10 R` with non-positive cells replaced by `log_floor`.
pub fn log_difference(comm: &SquareMatrix, null: &SquareMatrix, log_floor: f64) -> SquareMatrix {
    assert_eq!(comm.size(), null.size());
    let lg = |v: f64| if v > 0.0 { v.log10() } else { log_floor };
    SquareMatrix::from_fn(comm.size(), |i, j| lg(comm.get(i, j)) - lg(null.get(i, j)))
}

fn age_regression(edges: &[(u32, u32)]) -> Option<AgeRegression> {
    let n = 2.0 * edges.len() as f64;
    let pairs = || edges.iter().flat_map(|&(a, b)| [(a as f64, b as f64), (b as f64, a as f64)]);
    let mx = pairs().map(|p| p.0).sum::<f64>() / n;
    let my = pairs().map(|p| p.1).sum::<f64>() / n;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (x, y) in pairs() {
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
        sxy += (x - mx) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    Some(AgeRegression {
        slope,
        intercept: my - slope * mx,
        r: sxy / (sxx * syy).sqrt(),
        pairs: 2 * edges.len() as u64,
    })
}

/// Matrix CSV: header `age,<a0>,<a1>,...`, one row per age.
pub fn write_matrix_csv<W: Write>(m: &SquareMatrix, min_age: u32, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let ages: Vec<String> = (0..m.size()).map(|i| (min_age as usize + i).to_string()).collect();
    out.write_record(std::iter::once("age".to_owned()).chain(ages.iter().cloned()))?;
    for (i, age) in ages.iter().enumerate() {
        out.write_record(std::iter::once(age.clone()).chain(m.row(i).iter().map(|v| format!("{v:.6}"))))?;
    }
    out.flush()?;
    Ok(())
}

/// Two-column CSV `delta,links`.
pub fn write_delta_csv<W: Write>(curve: &[u64], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["delta", "links"])?;
    for (d, c) in curve.iter().enumerate() {
        out.write_record([d.to_string(), c.to_string()])?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::GraphBuilder;
    use crate::labels::{AgeBoundaries, Role, UserLabel};

    fn store(ages: &[(&str, u32)]) -> LabelStore {
        let mut s = LabelStore::new(AgeBoundaries::default());
        for (id, a) in ages {
            s.insert(UserLabel { user_id: id.to_string(), age: Some(*a), gender: None, role: Role::Seed })
                .unwrap();
        }
        s
    }

    #[test]
    fn uniform_null() {
        let mut b = GraphBuilder::new();
        for (x, y) in [("a", "b"), ("b", "c"), ("c", "d"), ("a", "d"), ("a", "c")] {
            b.add_contact(x, y);
        }
        let labels = store(&[("a", 20), ("b", 21), ("c", 22), ("d", 23)]);
        let r = homophily_matrices(&b.build(), &labels);
        for i in 0..4 {
            for j in 0..4 {
                assert!((r.null.get(i, j) - 5.0 / 16.0 * 2.0).abs() < 1e-12);
            }
        }
        assert_eq!(r.comm.sum(), 10.0);
        assert!(r.comm.is_symmetric(0.0));
        assert_eq!(r.delta_curve.iter().sum::<u64>(), 10);
    }

    #[test]
    fn equal_matrices_give_zero_log_difference() {
        let m = SquareMatrix::from_fn(3, |i, j| (i + j) as f64);
        let d = log_difference(&m, &m, default_log_floor());
        assert!(d.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn no_labeled_edges_warns() {
        let mut b = GraphBuilder::new();
        b.add_contact("a", "b");
        let r = homophily_matrices(&b.build(), &store(&[("a", 30)]));
        assert_eq!(r.labeled_edges, 0);
        assert_eq!(r.warnings.len(), 1);
    }

    #[test]
    fn matrix_csv_layout() {
        let m = SquareMatrix::from_fn(2, |i, j| (i * 2 + j) as f64);
        let mut buf = Vec::new();
        write_matrix_csv(&m, 30, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "age,30,31\n30,0.000000,1.000000\n31,2.000000,3.000000\n");
    }
}
