//! Stage bodies shared by the pipeline driver and the CLI subcommands.

use std::io::Write;
use std::path::Path;

use chrono::FixedOffset;
use serde::{Deserialize, Serialize};

use super::files::{create_with, in_file, open, write_json};
use crate::classify::{
    grid_search, predict, train_logistic, train_multinomial, GridPoint, GridResult, ModelKind, PredictionSet,
    RegConfig,
};
use crate::diffusion::{DiffusionRun, NodeLabels};
use crate::error::{Error, Result};
use crate::features::{
    extract_features, pca, preprocess, read_cdr_csv, read_sms_csv, skew_report, write_cdr_csv, write_skew_csv,
    write_sms_csv, CdrRecord, ColumnKind, ExtractOptions, FeatureMatrix, PcaResult, SmsRecord, LOG_PREFIX,
    SCALED_PREFIX,
};
use crate::graph::{build_graph, prune_graph, read_snapshot, write_snapshot, NodeId, Pruned, SocialGraph};
use crate::labels::{AgeBoundaries, Gender, LabelStore, Role};
use crate::pps::{compute_quotas, pps_assign, PpsAssignment};
use crate::stats::{
    bootstrap_means, gender_conditionals, homophily_matrices, percentile_range, tukey_hsd, write_delta_csv,
    write_matrix_csv, GenderConditionals, HomophilyReport, TukeyPair,
};
use crate::synth::{generate_events, generate_graph, generate_population, SynthConfig};

/// File names inside an output directory.
pub mod artifact {
    pub const CALLS: &str = "calls.csv";
    pub const SMS: &str = "sms.csv";
    pub const LABELS: &str = "labels.csv";
    pub const GRAPH: &str = "graph.bin";
    pub const GRAPH_REPORT: &str = "graph_report.json";
    pub const FEATURES_RAW: &str = "features_raw.csv";
    pub const FEATURES: &str = "features.csv";
    pub const SKEW: &str = "skew.csv";
    pub const PCA: &str = "pca.json";
    pub const STATS_SUMMARY: &str = "stats_summary.json";
    pub const TUKEY: &str = "tukey.csv";
    pub const BOOTSTRAP: &str = "bootstrap_duration.csv";
    pub const HOMOPHILY_COMM: &str = "homophily_comm.csv";
    pub const HOMOPHILY_NULL: &str = "homophily_null.csv";
    pub const HOMOPHILY_LOG_DIFF: &str = "homophily_log_diff.csv";
    pub const DELTA_CURVE: &str = "delta_curve.csv";
    pub const MODEL: &str = "model.json";
    pub const GRID: &str = "grid.csv";
    pub const ML_PROBS: &str = "ml_probs.csv";
    pub const PYRAMID: &str = "pyramid.csv";
    pub const ACCURACY_BY_Q: &str = "accuracy_by_q.csv";
    pub const COVERAGE_BY_Q: &str = "coverage_by_q.csv";
    pub const EVAL_REPORT: &str = "eval_report.json";
    pub const EVAL_STRATA: &str = "eval_strata.csv";

    pub fn state(method: &str) -> String {
        format!("state_{method}.csv")
    }

    pub fn trace(method: &str) -> String {
        format!("trace_{method}.csv")
    }

    pub fn pps(method: &str, q: f64) -> String {
        format!("pps_{method}_q{q}.csv")
    }
}

pub fn utc_offset(minutes: i32) -> Result<FixedOffset> {
    FixedOffset::east_opt(minutes * 60).ok_or_else(|| Error::invalid(format!("utc offset {minutes} min out of range")))
}

pub fn load_labels(path: &Path, boundaries: AgeBoundaries) -> Result<LabelStore> {
    in_file(path, LabelStore::read_csv(open(path)?, boundaries))
}

pub fn load_calls(path: &Path, offset: FixedOffset) -> Result<Vec<CdrRecord>> {
    in_file(path, read_cdr_csv(open(path)?, offset))
}

pub fn load_sms(path: &Path, offset: FixedOffset) -> Result<Vec<SmsRecord>> {
    in_file(path, read_sms_csv(open(path)?, offset))
}

pub fn load_graph(path: &Path) -> Result<SocialGraph> {
    in_file(path, read_snapshot(open(path)?))
}

pub fn load_features(path: &Path) -> Result<FeatureMatrix> {
    in_file(path, FeatureMatrix::read_csv(open(path)?))
}

pub fn load_predictions(path: &Path) -> Result<PredictionSet> {
    in_file(path, PredictionSet::read_csv(open(path)?))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthSummary {
    pub users: usize,
    pub generated_edges: usize,
    pub calls: usize,
    pub sms: usize,
}

/// Writes `calls.csv`, `sms.csv` and `labels.csv` into `out`.
pub fn synthesize(cfg: &SynthConfig, out: &Path) -> Result<SynthSummary> {
    let labels = generate_population(cfg)?;
    let graph = generate_graph(&labels, cfg)?;
    let events = generate_events(&graph, &labels, cfg, &cfg.window.window()?)?;
    create_with(&out.join(artifact::CALLS), |w| write_cdr_csv(&events.calls, w))?;
    create_with(&out.join(artifact::SMS), |w| write_sms_csv(&events.sms, w))?;
    create_with(&out.join(artifact::LABELS), |w| labels.write_csv(w))?;
    Ok(SynthSummary {
        users: labels.len(),
        generated_edges: graph.edge_count(),
        calls: events.calls.len(),
        sms: events.sms.len(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphReport {
    pub nodes_before: usize,
    pub edges_before: usize,
    pub nodes: usize,
    pub edges: usize,
    pub max_degree: usize,
    pub removed_high_degree: usize,
    pub removed_seedless: usize,
    pub seeds: usize,
    /// Seed users with no call or message.
    pub missing_seeds: Vec<String>,
    /// Seed users removed by the degree filter.
    pub dropped_seeds: Vec<String>,
}

/// Symmetrized contact graph of all records, pruned around the label
/// store's seeds.
pub fn build_pruned_graph(
    calls: &[CdrRecord],
    sms: &[SmsRecord],
    labels: &LabelStore,
    max_degree: usize,
) -> Result<(Pruned, GraphReport)> {
    let contacts: Vec<(&str, &str)> = calls
        .iter()
        .map(|c| (c.caller.as_str(), c.callee.as_str()))
        .chain(sms.iter().map(|s| (s.sender.as_str(), s.receiver.as_str())))
        .collect();
    let full = build_graph(&contacts);
    let mut missing = Vec::new();
    let mut seeds = Vec::new();
    for u in labels.with_role(Role::Seed) {
        match full.node_id(&u.user_id) {
            Some(x) => seeds.push(x),
            None => missing.push(u.user_id.clone()),
        }
    }
    let pruned = prune_graph(&full, &seeds, max_degree)?;
    let report = GraphReport {
        nodes_before: full.node_count(),
        edges_before: full.edge_count(),
        nodes: pruned.graph.node_count(),
        edges: pruned.graph.edge_count(),
        max_degree,
        removed_high_degree: pruned.report.removed_high_degree,
        removed_seedless: pruned.report.removed_seedless,
        seeds: pruned.seeds.len(),
        missing_seeds: missing,
        dropped_seeds: pruned.report.dropped_seeds.iter().map(|&x| full.external_id(x).to_owned()).collect(),
    };
    Ok((pruned, report))
}

pub fn write_graph_artifacts(pruned: &Pruned, report: &GraphReport, out: &Path) -> Result<()> {
    create_with(&out.join(artifact::GRAPH), |w| write_snapshot(&pruned.graph, w))?;
    write_json(&out.join(artifact::GRAPH_REPORT), report)
}

/// Raw extraction plus preprocessing; returns (raw, preprocessed, skipped).
pub fn compute_features(
    calls: &[CdrRecord],
    sms: &[SmsRecord],
    opts: &ExtractOptions,
) -> Result<(FeatureMatrix, FeatureMatrix, u64)> {
    let extraction = extract_features(calls, sms, opts);
    let pre = preprocess(&extraction.matrix)?;
    Ok((extraction.matrix, pre, extraction.skipped_outside_window))
}

/// Column families for PCA and classifiers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ColumnSet {
    Raw,
    Log,
    ScaledRaw,
    ScaledLog,
    Scaled,
}

impl std::str::FromStr for ColumnSet {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "raw" => Ok(ColumnSet::Raw),
            "log" => Ok(ColumnSet::Log),
            "scaled-raw" => Ok(ColumnSet::ScaledRaw),
            "scaled-log" => Ok(ColumnSet::ScaledLog),
            "scaled" => Ok(ColumnSet::Scaled),
            other => Err(format!("unknown column set {other:?}")),
        }
    }
}

impl ColumnSet {
    pub fn columns(self, m: &FeatureMatrix) -> Vec<usize> {
        let scaled_log = format!("{SCALED_PREFIX}{LOG_PREFIX}");
        m.column_names()
            .iter()
            .enumerate()
            .filter(|(j, name)| {
                let kind = m.column_kinds()[*j];
                match self {
                    ColumnSet::Raw => kind == ColumnKind::Raw,
                    ColumnSet::Log => kind == ColumnKind::Log,
                    ColumnSet::Scaled => kind == ColumnKind::Rescaled,
                    ColumnSet::ScaledLog => name.starts_with(&scaled_log),
                    ColumnSet::ScaledRaw => kind == ColumnKind::Rescaled && !name.starts_with(&scaled_log),
                }
            })
            .map(|(j, _)| j)
            .collect()
    }
}

pub fn write_feature_artifacts(
    raw: &FeatureMatrix,
    pre: &FeatureMatrix,
    pca_result: Option<&PcaResult>,
    out: &Path,
) -> Result<()> {
    create_with(&out.join(artifact::FEATURES_RAW), |w| raw.write_csv(w))?;
    create_with(&out.join(artifact::FEATURES), |w| pre.write_csv(w))?;
    let mut skew_cols = ColumnSet::Raw.columns(pre);
    skew_cols.extend(ColumnSet::Log.columns(pre));
    let all_rows: Vec<usize> = (0..pre.n_rows()).collect();
    let skew = skew_report(&pre.select(&all_rows, &skew_cols));
    create_with(&out.join(artifact::SKEW), |w| write_skew_csv(&skew, w))?;
    if let Some(p) = pca_result {
        write_json(&out.join(artifact::PCA), p)?;
    }
    Ok(())
}

/// PCA over a column family, `k` clamped to the family size.
pub fn pca_on(m: &FeatureMatrix, set: ColumnSet, k: usize) -> Result<PcaResult> {
    let cols = ColumnSet::columns(set, m);
    pca(m, &cols, k.min(cols.len()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatsConfig {
    pub bootstrap_resamples: usize,
    pub fwer: f64,
    /// Columns compared across age groups with Tukey HSD.
    pub tukey_columns: Vec<String>,
}

impl Default for StatsConfig {
    fn default() -> Self {
        StatsConfig {
            bootstrap_resamples: 400,
            fwer: 0.05,
            tukey_columns: ["log-all-count-total", "log-all-time-total", "log-all-sms-total", "log-degree-total"]
                .map(String::from)
                .to_vec(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSummary {
    pub variable: String,
    pub male_users: usize,
    pub female_users: usize,
    pub male_range_95: Option<(f64, f64)>,
    pub female_range_95: Option<(f64, f64)>,
    pub overlapping: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TukeyRow {
    pub column: String,
    #[serde(flatten)]
    pub pair: TukeyPair,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatsSummary {
    pub gender: GenderConditionals,
    pub bootstrap: BootstrapSummary,
    pub tukey: Vec<TukeyRow>,
    pub homophily_labeled_nodes: u64,
    pub homophily_labeled_edges: u64,
    pub homophily_regression: Option<crate::stats::AgeRegression>,
    pub warnings: Vec<String>,
}

pub struct StatsOutputs {
    pub summary: StatsSummary,
    pub bootstrap_male: Vec<f64>,
    pub bootstrap_female: Vec<f64>,
    pub homophily: HomophilyReport,
}

/// Gender mixing, bootstrap of mean outgoing call duration by gender,
/// Tukey HSD across age groups and age homophily on `graph`.
pub fn observational_stats(
    calls: &[CdrRecord],
    labels: &LabelStore,
    graph: &SocialGraph,
    features: &FeatureMatrix,
    cfg: &StatsConfig,
    seed: u64,
) -> Result<StatsOutputs> {
    let mut warnings = Vec::new();
    let gender = gender_conditionals(calls, labels);

    let out_time = features.column_index("out-time-total");
    let out_count = features.column_index("out-count-total");
    let (mut male, mut female) = (Vec::new(), Vec::new());
    if let (Some(t), Some(c)) = (out_time, out_count) {
        for (i, user) in features.user_ids().iter().enumerate() {
            let count = features.value(i, c);
            if count <= 0.0 {
                continue;
            }
            match labels.get(user).and_then(|u| u.gender) {
                Some(Gender::Male) => male.push(features.value(i, t) / count),
                Some(Gender::Female) => female.push(features.value(i, t) / count),
                None => {}
            }
        }
    } else {
        warnings.push("feature matrix lacks out-time-total/out-count-total; bootstrap skipped".into());
    }
    let boot = |v: &[f64], label: &str| -> Result<Vec<f64>> {
        if v.is_empty() {
            Ok(Vec::new())
        } else {
            bootstrap_means(v, cfg.bootstrap_resamples, crate::rng::derive_seed(seed, label))
        }
    };
    let bootstrap_male = boot(&male, "bootstrap-male")?;
    let bootstrap_female = boot(&female, "bootstrap-female")?;
    let male_range = percentile_range(&bootstrap_male, 0.95);
    let female_range = percentile_range(&bootstrap_female, 0.95);
    let overlapping = match (male_range, female_range) {
        (Some(m), Some(f)) => Some(m.0 <= f.1 && f.0 <= m.1),
        _ => None,
    };

    let mut tukey = Vec::new();
    for column in &cfg.tukey_columns {
        let Some(j) = features.column_index(column) else {
            warnings.push(format!("Tukey column {column} not found"));
            continue;
        };
        let mut groups = vec![Vec::new(); labels.categories()];
        for (i, user) in features.user_ids().iter().enumerate() {
            if let Some(k) = labels.age_category(user) {
                groups[k].push(features.value(i, j));
            }
        }
        match tukey_hsd(&groups, cfg.fwer) {
            Ok(r) => tukey.extend(r.pairs.into_iter().map(|pair| TukeyRow { column: column.clone(), pair })),
            Err(e) => warnings.push(format!("Tukey HSD on {column}: {e}")),
        }
    }

    let homophily = homophily_matrices(graph, labels);
    warnings.extend(homophily.warnings.iter().cloned());
    Ok(StatsOutputs {
        summary: StatsSummary {
            gender,
            bootstrap: BootstrapSummary {
                variable: "out-time-total / out-count-total".into(),
                male_users: male.len(),
                female_users: female.len(),
                male_range_95: male_range,
                female_range_95: female_range,
                overlapping,
            },
            tukey,
            homophily_labeled_nodes: homophily.labeled_nodes,
            homophily_labeled_edges: homophily.labeled_edges,
            homophily_regression: homophily.regression,
            warnings,
        },
        bootstrap_male,
        bootstrap_female,
        homophily,
    })
}

pub fn write_stats_artifacts(s: &StatsOutputs, out: &Path) -> Result<()> {
    write_json(&out.join(artifact::STATS_SUMMARY), &s.summary)?;
    create_with(&out.join(artifact::TUKEY), |w| {
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(["column", "group1", "group2", "meandiff", "p_adj", "lower", "upper", "reject"])?;
        for r in &s.summary.tukey {
            let p = &r.pair;
            csv.write_record([
                r.column.clone(),
                p.group1.to_string(),
                p.group2.to_string(),
                format!("{:.6}", p.meandiff),
                format!("{:.6}", p.p_adj),
                format!("{:.6}", p.lower),
                format!("{:.6}", p.upper),
                p.reject.to_string(),
            ])?;
        }
        csv.flush()?;
        Ok(())
    })?;
    create_with(&out.join(artifact::BOOTSTRAP), |w| {
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(["resample", "male", "female"])?;
        let n = s.bootstrap_male.len().max(s.bootstrap_female.len());
        let cell = |v: &[f64], i: usize| v.get(i).map(|x| format!("{x:.6}")).unwrap_or_default();
        for i in 0..n {
            csv.write_record([i.to_string(), cell(&s.bootstrap_male, i), cell(&s.bootstrap_female, i)])?;
        }
        csv.flush()?;
        Ok(())
    })?;
    let h = &s.homophily;
    create_with(&out.join(artifact::HOMOPHILY_COMM), |w| write_matrix_csv(&h.comm, h.min_age, w))?;
    create_with(&out.join(artifact::HOMOPHILY_NULL), |w| write_matrix_csv(&h.null, h.min_age, w))?;
    create_with(&out.join(artifact::HOMOPHILY_LOG_DIFF), |w| write_matrix_csv(&h.log_diff, h.min_age, w))?;
    create_with(&out.join(artifact::DELTA_CURVE), |w| write_delta_csv(&h.delta_curve, w))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    Age,
    Gender,
}

impl std::str::FromStr for Target {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "age" => Ok(Target::Age),
            "gender" => Ok(Target::Gender),
            other => Err(format!("unknown target {other:?}")),
        }
    }
}

pub struct ClassifyOutputs {
    pub grid: GridResult,
    /// Best configuration refit on every training row.
    pub model: crate::classify::ClassifierModel,
    /// Probabilities for every feature row.
    pub predictions: PredictionSet,
}

/// Grid search on users with role `seed` and a known target, using the
/// rescaled columns; the winner is refit on all of them.
pub fn train_classifier(
    features: &FeatureMatrix,
    labels: &LabelStore,
    target: Target,
    grid: &[GridPoint],
    split: f64,
    seed: u64,
) -> Result<ClassifyOutputs> {
    let cols = ColumnSet::Scaled.columns(features);
    if cols.is_empty() {
        return Err(Error::invalid("feature matrix has no rescaled columns; run preprocessing first"));
    }
    let (kind, classes) = match target {
        Target::Age => (ModelKind::Multinomial, labels.categories()),
        Target::Gender => (ModelKind::Binary, 2),
    };
    let mut rows = Vec::new();
    let mut targets = Vec::new();
    for (i, user) in features.user_ids().iter().enumerate() {
        let Some(u) = labels.get(user) else { continue };
        if u.role != Role::Seed {
            continue;
        }
        let t = match target {
            Target::Age => labels.age_category(user),
            Target::Gender => u.gender.map(|g| usize::from(g == Gender::Female)),
        };
        if let Some(t) = t {
            rows.push(i);
            targets.push(t);
        }
    }
    if rows.len() < 2 {
        return Err(Error::invalid("fewer than two labeled seed users with features"));
    }
    let train = features.select(&rows, &cols);
    let grid = grid_search(&train, &targets, kind, classes, grid, split, seed)?;

    let ranked = crate::classify::rank_features(&crate::classify::separation_scores(
        &train,
        &(0..rows.len()).collect::<Vec<_>>(),
        &targets,
        classes,
    ));
    let mut chosen = ranked[..grid.best.k].to_vec();
    chosen.sort_unstable();
    let refit_matrix = train.select(&(0..rows.len()).collect::<Vec<_>>(), &chosen);
    let reg = RegConfig::new(grid.best.penalty, grid.best.c)?;
    let model = match kind {
        ModelKind::Binary => train_logistic(&refit_matrix, &targets, &reg)?.model,
        ModelKind::Multinomial => train_multinomial(&refit_matrix, &targets, classes, &reg)?.model,
    };
    let predictions = predict(&model, features)?;
    Ok(ClassifyOutputs { grid, model, predictions })
}

pub fn write_classify_artifacts(c: &ClassifyOutputs, out: &Path) -> Result<()> {
    create_with(&out.join(artifact::MODEL), |w| {
        w.write_all(c.model.to_json()?.as_bytes())?;
        w.write_all(b"\n")?;
        Ok(())
    })?;
    create_with(&out.join(artifact::GRID), |w| {
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(["penalty", "c", "k", "validation_accuracy"])?;
        for e in &c.grid.evaluations {
            let penalty = match e.penalty {
                crate::classify::Penalty::L1 => "l1",
                crate::classify::Penalty::L2 => "l2",
            };
            csv.write_record([
                penalty.to_owned(),
                e.c.to_string(),
                e.k.to_string(),
                format!("{:.6}", e.validation_accuracy),
            ])?;
        }
        csv.flush()?;
        Ok(())
    })?;
    create_with(&out.join(artifact::ML_PROBS), |w| c.predictions.write_csv(w))
}

pub fn write_diffusion_artifacts(g: &SocialGraph, run: &DiffusionRun, method: &str, out: &Path) -> Result<()> {
    create_with(&out.join(artifact::state(method)), |w| run.state.write_csv(g, w))?;
    create_with(&out.join(artifact::trace(method)), |w| run.trace.write_csv(w))
}

/// Probability rows for every node of `g`, looked up by external id.
pub fn rows_for_graph(g: &SocialGraph, p: &PredictionSet) -> Result<Vec<Vec<f64>>> {
    let index: std::collections::HashMap<&str, usize> =
        p.user_ids.iter().enumerate().map(|(i, u)| (u.as_str(), i)).collect();
    g.nodes()
        .map(|x| {
            let id = g.external_id(x);
            index
                .get(id)
                .map(|&i| p.prob[i].clone())
                .ok_or_else(|| Error::MissingLabel(format!("no probability row for {id}")))
        })
        .collect()
}

/// PPS over the non-seed nodes of `g`; returns the assignment (non-seed
/// users only) and a per-node prediction vector.
pub fn pps_non_seeds(
    g: &SocialGraph,
    labels: &NodeLabels,
    rows: &[Vec<f64>],
    q: f64,
    pyramid: &[f64],
) -> Result<(PpsAssignment, Vec<Option<usize>>)> {
    let nodes: Vec<usize> = (0..g.node_count()).filter(|&x| !labels.is_seed(x)).collect();
    let set = PredictionSet::from_rows(
        nodes.iter().map(|&x| g.external_id(NodeId::from(x)).to_owned()).collect(),
        nodes.iter().map(|&x| rows[x].clone()).collect(),
    )?;
    let spec = compute_quotas(nodes.len(), q, pyramid)?;
    let assignment = pps_assign(&set, &spec)?;
    let mut per_node = vec![None; g.node_count()];
    for (&x, a) in nodes.iter().zip(&assignment.assigned) {
        per_node[x] = *a;
    }
    Ok((assignment, per_node))
}

/// Per-node predictions from an assignments CSV.
pub fn load_assignments(path: &Path, g: &SocialGraph) -> Result<Vec<Option<usize>>> {
    let rows = in_file(path, crate::pps::read_assignments_csv(open(path)?))?;
    let mut per_node = vec![None; g.node_count()];
    for (user, cat) in rows {
        if let Some(x) = g.node_id(&user) {
            per_node[x.index()] = cat;
        }
    }
    Ok(per_node)
}
