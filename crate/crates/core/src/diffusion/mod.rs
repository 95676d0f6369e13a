//! Reaction-diffusion label propagation.
//!
//! Each node keeps a probability vector over `C` age categories. At every
//! iteration
//!
//! ```text
//! g_{x,t} = (1 − λ)·g_{x,0} + λ · mean_{y∼x} g_{y,t−1}
//! ```
//!
//! computed from a frozen copy of iteration `t − 1`. The fixed point solves
//! `(I − λD⁻¹A)g = (1 − λ)g₀`; for `λ < 1` the sweep contracts by `λ` in
//! the ∞-norm.

mod kernel;

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::classify::{argmax, PredictionSet};
use crate::error::{Error, Result};
use crate::graph::SocialGraph;
use crate::labels::{LabelStore, Role};

pub use kernel::{propagate, residual_inf};

/// Tolerance on row sums asserted after every sweep.
pub const ROW_SUM_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitMode {
    /// Non-seed rows start at `1/C`.
    Uniform,
    /// Non-seed rows start at classifier probabilities.
    Ml,
}

impl std::str::FromStr for InitMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "uniform" => Ok(InitMode::Uniform),
            "ml" => Ok(InitMode::Ml),
            other => Err(format!("unknown init mode {other:?}")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiffusionConfig {
    pub lambda: f64,
    pub max_iterations: usize,
    /// Stop once the ∞-norm of the state change drops below this.
    pub convergence_tol: f64,
    pub mode: InitMode,
}

impl Default for DiffusionConfig {
    fn default() -> Self {
        DiffusionConfig { lambda: 0.5, max_iterations: 30, convergence_tol: 1e-8, mode: InitMode::Uniform }
    }
}

impl DiffusionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::invalid(format!("lambda must lie in [0, 1], got {}", self.lambda)));
        }
        if self.convergence_tol.is_nan() || self.convergence_tol < 0.0 {
            return Err(Error::invalid("convergence tolerance must be non-negative"));
        }
        Ok(())
    }
}

/// Row-major `n × C` probabilities.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbabilityState {
    categories: usize,
    iteration: usize,
    values: Vec<f64>,
}

impl ProbabilityState {
    pub fn new(categories: usize, values: Vec<f64>) -> Result<Self> {
        if categories == 0 || !values.len().is_multiple_of(categories) {
            return Err(Error::Dimension(format!("{} values do not form rows of {categories}", values.len())));
        }
        Ok(ProbabilityState { categories, iteration: 0, values })
    }

    pub fn categories(&self) -> usize {
        self.categories
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn node_count(&self) -> usize {
        self.values.len() / self.categories
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.values[x * self.categories..(x + 1) * self.categories]
    }

    pub fn argmax(&self) -> Vec<usize> {
        self.values.chunks(self.categories).map(argmax).collect()
    }

    /// Largest `|Σ_k g_{x,k} − 1|` over all rows.
    pub fn max_row_sum_error(&self) -> f64 {
        self.values.chunks(self.categories).map(|r| (r.iter().sum::<f64>() - 1.0).abs()).fold(0.0, f64::max)
    }

    /// Rows labeled by the graph's external ids.
    pub fn to_predictions(&self, g: &SocialGraph) -> PredictionSet {
        let prob = self.values.chunks(self.categories).map(<[f64]>::to_vec).collect();
        PredictionSet::from_rows(g.external_ids().to_vec(), prob).expect("one row per node")
    }

    /// CSV `user_id,p_0,...,p_{C−1},argmax`.
    pub fn write_csv<W: Write>(&self, g: &SocialGraph, w: W) -> Result<()> {
        self.to_predictions(g).write_csv(w)
    }
}

/// Per-node seed and validation categories.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeLabels {
    pub categories: usize,
    pub seed: Vec<Option<usize>>,
    pub validation: Vec<Option<usize>>,
}

impl NodeLabels {
    pub fn new(categories: usize, seed: Vec<Option<usize>>, validation: Vec<Option<usize>>) -> Result<Self> {
        if seed.len() != validation.len() {
            return Err(Error::Dimension("seed and validation vectors differ in length".into()));
        }
        if seed.iter().chain(&validation).flatten().any(|&c| c >= categories) {
            return Err(Error::invalid(format!("category out of range for {categories} categories")));
        }
        if seed.iter().zip(&validation).any(|(s, v)| s.is_some() && v.is_some()) {
            return Err(Error::invalid("a node cannot be both seed and validation"));
        }
        Ok(NodeLabels { categories, seed, validation })
    }

    /// Looks every graph node up in `store`; seeds must carry an age.
    pub fn from_store(g: &SocialGraph, store: &LabelStore) -> Result<Self> {
        let mut seed = vec![None; g.node_count()];
        let mut validation = vec![None; g.node_count()];
        for x in g.nodes() {
            let id = g.external_id(x);
            let Some(label) = store.get(id) else { continue };
            match label.role {
                Role::Seed => {
                    seed[x.index()] = Some(
                        store
                            .age_category(id)
                            .ok_or_else(|| Error::MissingLabel(format!("seed {id} has no age")))?,
                    );
                }
                Role::Validation => validation[x.index()] = store.age_category(id),
                Role::Unlabeled => {}
            }
        }
        NodeLabels::new(store.categories(), seed, validation)
    }

    pub fn is_seed(&self, x: usize) -> bool {
        self.seed[x].is_some()
    }

    pub fn validation_count(&self) -> usize {
        self.validation.iter().flatten().count()
    }

    /// Fraction of validation nodes whose predicted category is correct.
    pub fn accuracy(&self, predicted: &[usize]) -> Option<f64> {
        let mut total = 0usize;
        let mut hits = 0usize;
        for (truth, p) in self.validation.iter().zip(predicted) {
            if let Some(t) = truth {
                total += 1;
                hits += usize::from(t == p);
            }
        }
        (total > 0).then(|| hits as f64 / total as f64)
    }
}

/// Seed rows one-hot; other rows uniform or taken from `ml` (matched by
/// external id and renormalized when off by more than [`ROW_SUM_TOL`]).
pub fn init_state(
    g: &SocialGraph,
    labels: &NodeLabels,
    mode: InitMode,
    ml: Option<&PredictionSet>,
) -> Result<ProbabilityState> {
    let c = labels.categories;
    let n = g.node_count();
    if labels.seed.len() != n {
        return Err(Error::Dimension(format!("labels cover {} nodes, graph has {n}", labels.seed.len())));
    }
    let ml_rows = match (mode, ml) {
        (InitMode::Ml, None) => return Err(Error::invalid("ml initialization needs classifier probabilities")),
        (InitMode::Ml, Some(p)) => {
            if p.classes() != c && !p.prob.is_empty() {
                return Err(Error::Dimension(format!("ml rows have {} classes, expected {c}", p.classes())));
            }
            Some(p.user_ids.iter().zip(&p.prob).map(|(u, r)| (u.as_str(), r)).collect::<std::collections::HashMap<_, _>>())
        }
        (InitMode::Uniform, _) => None,
    };

    let mut values = vec![0.0; n * c];
    for x in g.nodes() {
        let row = &mut values[x.index() * c..(x.index() + 1) * c];
        if let Some(k) = labels.seed[x.index()] {
            row[k] = 1.0;
            continue;
        }
        match &ml_rows {
            None => row.fill(1.0 / c as f64),
            Some(map) => {
                let id = g.external_id(x);
                let src = map.get(id).ok_or_else(|| Error::MissingLabel(format!("no ml probabilities for {id}")))?;
                if src.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                    return Err(Error::invalid(format!("ml row for {id} is not a probability vector")));
                }
                let sum: f64 = src.iter().sum();
                if sum <= 0.0 {
                    return Err(Error::invalid(format!("ml row for {id} sums to zero")));
                }
                if (sum - 1.0).abs() > ROW_SUM_TOL {
                    for (o, v) in row.iter_mut().zip(src.iter()) {
                        *o = v / sum;
                    }
                } else {
                    row.copy_from_slice(src);
                }
            }
        }
    }
    ProbabilityState::new(c, values)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub iteration: usize,
    pub delta_inf: f64,
    pub validation_accuracy: Option<f64>,
    pub max_row_sum_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTrace {
    pub entries: Vec<TraceEntry>,
    pub converged: bool,
    /// Validation accuracy of the initial state, if validation labels exist.
    pub initial_accuracy: Option<f64>,
}

impl ConvergenceTrace {
    /// CSV `iteration,delta_inf,validation_accuracy`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["iteration", "delta_inf", "validation_accuracy"])?;
        for e in &self.entries {
            let acc = e.validation_accuracy.map(|a| format!("{a:.6}")).unwrap_or_default();
            out.write_record([e.iteration.to_string(), format!("{:.6e}", e.delta_inf), acc])?;
        }
        out.flush()?;
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct DiffusionRun {
    pub state: ProbabilityState,
    pub trace: ConvergenceTrace,
    pub warnings: Vec<String>,
}

/// A graph, its initial state and a configuration, checked once.
#[derive(Clone, Debug)]
pub struct Diffusion<'g> {
    graph: &'g SocialGraph,
    init: ProbabilityState,
    config: DiffusionConfig,
    warnings: Vec<String>,
}

impl<'g> Diffusion<'g> {
    pub fn new(
        graph: &'g SocialGraph,
        labels: &NodeLabels,
        config: DiffusionConfig,
        ml: Option<&PredictionSet>,
    ) -> Result<Self> {
        config.validate()?;
        let init = init_state(graph, labels, config.mode, ml)?;
        let mut warnings = Vec::new();
        for x in graph.nodes() {
            if graph.degree(x) > 0 {
                continue;
            }
            if labels.is_seed(x.index()) {
                warnings.push(format!("isolated seed {} keeps its initial row", graph.external_id(x)));
            } else {
                return Err(Error::IsolatedNode { node: x.0, external: graph.external_id(x).to_owned() });
            }
        }
        Ok(Diffusion { graph, init, config, warnings })
    }

    pub fn init(&self) -> &ProbabilityState {
        &self.init
    }

    pub fn config(&self) -> &DiffusionConfig {
        &self.config
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// One Jacobi sweep from `state`.
    pub fn step(&self, state: &ProbabilityState) -> ProbabilityState {
        let mut next = ProbabilityState {
            categories: state.categories,
            iteration: state.iteration + 1,
            values: vec![0.0; state.values.len()],
        };
        self.step_into(state, &mut next);
        next
    }

    fn step_into(&self, prev: &ProbabilityState, next: &mut ProbabilityState) {
        propagate(self.graph, &self.init.values, &prev.values, &mut next.values, prev.categories, self.config.lambda);
        next.iteration = prev.iteration + 1;
        debug_assert!(
            next.max_row_sum_error() <= ROW_SUM_TOL,
            "row sums drifted by {}",
            next.max_row_sum_error()
        );
    }

    /// Residual of the linear system at `state`.
    pub fn residual(&self, state: &ProbabilityState) -> f64 {
        residual_inf(self.graph, &self.init.values, &state.values, state.categories, self.config.lambda)
    }

    /// Iterates until the state change falls below the tolerance or the
    /// iteration cap is hit. `validation` feeds the accuracy column only.
    pub fn run(&self, validation: Option<&NodeLabels>) -> DiffusionRun {
        let accuracy = |s: &ProbabilityState| validation.and_then(|v| v.accuracy(&s.argmax()));
        let mut prev = self.init.clone();
        let mut next = self.init.clone();
        let mut entries = Vec::with_capacity(self.config.max_iterations);
        let mut converged = false;
        for _ in 0..self.config.max_iterations {
            self.step_into(&prev, &mut next);
            let delta = prev.values.iter().zip(&next.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            entries.push(TraceEntry {
                iteration: next.iteration,
                delta_inf: delta,
                validation_accuracy: accuracy(&next),
                max_row_sum_error: next.max_row_sum_error(),
            });
            std::mem::swap(&mut prev, &mut next);
            if delta < self.config.convergence_tol {
                converged = true;
                break;
            }
        }
        DiffusionRun {
            trace: ConvergenceTrace { entries, converged, initial_accuracy: accuracy(&self.init) },
            state: prev,
            warnings: self.warnings.clone(),
        }
    }
}

/// Builds node labels from `store` and runs diffusion to completion.
pub fn run(
    g: &SocialGraph,
    store: &LabelStore,
    config: DiffusionConfig,
    ml: Option<&PredictionSet>,
) -> Result<DiffusionRun> {
    let labels = NodeLabels::from_store(g, store)?;
    Ok(Diffusion::new(g, &labels, config, ml)?.run(Some(&labels)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub lambda: f64,
    pub accuracy: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Final argmax validation accuracy for each `λ`, other settings from `base`.
pub fn lambda_sweep(
    g: &SocialGraph,
    labels: &NodeLabels,
    lambdas: &[f64],
    base: DiffusionConfig,
    ml: Option<&PredictionSet>,
) -> Result<Vec<SweepPoint>> {
    if labels.validation_count() == 0 {
        return Err(Error::invalid("lambda sweep needs validation nodes"));
    }
    lambdas
        .iter()
        .map(|&lambda| {
            let d = Diffusion::new(g, labels, DiffusionConfig { lambda, ..base }, ml)?;
            let r = d.run(None);
            Ok(SweepPoint {
                lambda,
                accuracy: labels.accuracy(&r.state.argmax()).expect("validation is non-empty"),
                iterations: r.trace.entries.len(),
                converged: r.trace.converged,
            })
        })
        .collect()
}
