//! Reproducible end-to-end experiment driver.
//!
//! A TOML config names the stages to run. They execute in the fixed order
//!
//! ```text
//! synth | ingest → features → stats → classify → diffuse → pps → evaluate
//! ```
//!
//! Every stage reads and writes files in one output directory and records
//! `manifest_<stage>.json` with the SHA-256 of its configuration, inputs and
//! outputs. A stage whose manifest still matches is skipped. After the run
//! `manifest.json` lists every artifact hash. Manifests carry no timestamps,
//! so a repeated run yields byte-identical files.
//!
//! All randomness comes from the master `seed`; each stage uses
//! `derive_seed(seed, stage_name)`.

pub(crate) mod files;
pub mod stages;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::classify::{grid, Penalty, PredictionSet};
use crate::diffusion::{Diffusion, DiffusionConfig, InitMode, NodeLabels};
use crate::error::{Error, Result};
use crate::eval::{evaluate, DegreeBuckets, EvalReport, MethodTable};
use crate::features::{DaySplit, ExtractOptions};
use crate::graph::{compute_topo_metrics, NodeId};
use crate::labels::{AgeBoundaries, Role};
use crate::pps::{read_pyramid_csv, write_pyramid_csv};
use crate::rng::derive_seed;
use crate::synth::{SynthConfig, WindowConfig};

pub use files::{sha256_bytes, sha256_file};
use files::{create_with, open, read_to_string, write_json};
use stages::{artifact, ColumnSet, StatsConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Synth,
    Ingest,
    Features,
    Stats,
    Classify,
    Diffuse,
    Pps,
    Evaluate,
}

impl Stage {
    pub const ALL: [Stage; 8] = [
        Stage::Synth,
        Stage::Ingest,
        Stage::Features,
        Stage::Stats,
        Stage::Classify,
        Stage::Diffuse,
        Stage::Pps,
        Stage::Evaluate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Synth => "synth",
            Stage::Ingest => "ingest",
            Stage::Features => "features",
            Stage::Stats => "stats",
            Stage::Classify => "classify",
            Stage::Diffuse => "diffuse",
            Stage::Pps => "pps",
            Stage::Evaluate => "evaluate",
        }
    }
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Prediction sources compared after PPS.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Classifier probabilities.
    Ml,
    /// Diffusion from uniform rows.
    Rdif,
    /// Diffusion from classifier rows.
    MlRdif,
    /// Every unlabeled row set to the seed age distribution.
    Baseline,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Ml => "ml",
            Method::Rdif => "rdif",
            Method::MlRdif => "ml_rdif",
            Method::Baseline => "baseline",
        }
    }

    fn needs_classifier(self) -> bool {
        matches!(self, Method::Ml | Method::MlRdif)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IngestConfig {
    pub cdr: PathBuf,
    pub sms: PathBuf,
    pub labels: PathBuf,
    /// Local time offset applied to timestamps that carry a zone.
    pub utc_offset_minutes: i32,
}

impl Default for IngestConfig {
    fn default() -> Self {
        IngestConfig {
            cdr: "cdr.csv".into(),
            sms: "sms.csv".into(),
            labels: "labels.csv".into(),
            utc_offset_minutes: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GraphConfig {
    pub max_degree: usize,
}

impl Default for GraphConfig {
    fn default() -> Self {
        GraphConfig { max_degree: crate::graph::DEFAULT_MAX_DEGREE }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeaturesConfig {
    /// Observation window; the synthetic window when absent.
    pub window: Option<WindowConfig>,
    pub day_split: DaySplit,
    /// Principal components kept; 0 skips PCA.
    pub pca_k: usize,
    pub pca_columns: ColumnSet,
}

impl Default for FeaturesConfig {
    fn default() -> Self {
        FeaturesConfig { window: None, day_split: DaySplit::default(), pca_k: 10, pca_columns: ColumnSet::ScaledLog }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifyConfig {
    pub cs: Vec<f64>,
    /// Feature counts; 0 keeps every column.
    pub ks: Vec<usize>,
    pub penalties: Vec<Penalty>,
    pub split: f64,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        ClassifyConfig {
            cs: vec![0.1, 0.3, 1.0, 3.0, 10.0],
            ks: vec![10, 30, 0],
            penalties: vec![Penalty::L1, Penalty::L2],
            split: 0.7,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiffuseConfig {
    pub lambda: f64,
    pub max_iterations: usize,
    pub convergence_tol: f64,
}

impl Default for DiffuseConfig {
    fn default() -> Self {
        let d = DiffusionConfig::default();
        DiffuseConfig { lambda: d.lambda, max_iterations: d.max_iterations, convergence_tol: d.convergence_tol }
    }
}

impl DiffuseConfig {
    pub fn to_diffusion(&self, mode: InitMode) -> DiffusionConfig {
        DiffusionConfig {
            lambda: self.lambda,
            max_iterations: self.max_iterations,
            convergence_tol: self.convergence_tol,
            mode,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PpsConfig {
    pub qs: Vec<f64>,
    /// Target age distribution; the seed distribution when absent.
    pub pyramid: Option<Vec<f64>>,
    pub methods: Vec<Method>,
}

impl Default for PpsConfig {
    fn default() -> Self {
        PpsConfig {
            qs: vec![1.0, 0.5, 0.25, 0.125],
            pyramid: None,
            methods: vec![Method::Ml, Method::Rdif, Method::MlRdif, Method::Baseline],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluateConfig {
    pub degree_buckets: Vec<u32>,
}

impl Default for EvaluateConfig {
    fn default() -> Self {
        EvaluateConfig { degree_buckets: vec![2, 29, 48, 66, 100] }
    }
}

/// Full pipeline configuration. Every section has defaults, so an empty
/// file is valid and runs nothing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub stages: Vec<Stage>,
    pub seed: u64,
    pub age_boundaries: Vec<u32>,
    pub synth: SynthConfig,
    pub ingest: IngestConfig,
    pub graph: GraphConfig,
    pub features: FeaturesConfig,
    pub stats: StatsConfig,
    pub classify: ClassifyConfig,
    pub diffuse: DiffuseConfig,
    pub pps: PpsConfig,
    pub evaluate: EvaluateConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            stages: Vec::new(),
            seed: 7,
            age_boundaries: vec![25, 35, 50],
            synth: SynthConfig::default(),
            ingest: IngestConfig::default(),
            graph: GraphConfig::default(),
            features: FeaturesConfig::default(),
            stats: StatsConfig::default(),
            classify: ClassifyConfig::default(),
            diffuse: DiffuseConfig::default(),
            pps: PpsConfig::default(),
            evaluate: EvaluateConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: PipelineConfig = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        files::in_file(path, Self::from_toml_str(&read_to_string(path)?))
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// All stages from synthetic data to evaluation.
    pub fn synthetic() -> Self {
        PipelineConfig {
            stages: vec![
                Stage::Synth,
                Stage::Features,
                Stage::Stats,
                Stage::Classify,
                Stage::Diffuse,
                Stage::Pps,
                Stage::Evaluate,
            ],
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = std::collections::BTreeSet::new();
        for s in &self.stages {
            if !seen.insert(*s) {
                return Err(Error::Config(format!("stage {s} listed twice")));
            }
        }
        if seen.contains(&Stage::Synth) && seen.contains(&Stage::Ingest) {
            return Err(Error::Config("synth and ingest are alternative sources; pick one".into()));
        }
        AgeBoundaries::new(self.age_boundaries.clone())?;
        if seen.contains(&Stage::Synth) {
            self.synth.validate()?;
        }
        if self.graph.max_degree == 0 {
            return Err(Error::Config("graph.max_degree must be at least 1".into()));
        }
        if self.classify.cs.is_empty() || self.classify.penalties.is_empty() || self.classify.ks.is_empty() {
            return Err(Error::Config("classify grid axes must be non-empty".into()));
        }
        self.diffuse.to_diffusion(InitMode::Uniform).validate()?;
        if self.pps.qs.iter().any(|q| !(*q > 0.0 && *q <= 1.0)) {
            return Err(Error::Config("pps.qs must lie in (0, 1]".into()));
        }
        DegreeBuckets::new(self.evaluate.degree_buckets.clone())?;
        Ok(())
    }

    fn boundaries(&self) -> Result<AgeBoundaries> {
        AgeBoundaries::new(self.age_boundaries.clone())
    }

    fn uses_classifier(&self) -> bool {
        self.pps.methods.iter().any(|m| m.needs_classifier())
    }

    /// Stages in execution order.
    pub fn ordered_stages(&self) -> Vec<Stage> {
        let mut s = self.stages.clone();
        s.sort_unstable();
        s
    }

    /// The configuration each stage depends on, hashed into its manifest.
    fn stage_config(&self, stage: Stage) -> serde_json::Value {
        use serde_json::json;
        match stage {
            Stage::Synth => json!({ "synth": self.synth, "graph": self.graph, "age_boundaries": self.age_boundaries }),
            Stage::Ingest => json!({ "ingest": self.ingest, "graph": self.graph, "age_boundaries": self.age_boundaries }),
            Stage::Features => json!({ "features": self.features, "window": self.window() }),
            Stage::Stats => json!({ "stats": self.stats, "age_boundaries": self.age_boundaries }),
            Stage::Classify => json!({ "classify": self.classify, "age_boundaries": self.age_boundaries }),
            Stage::Diffuse => json!({
                "diffuse": self.diffuse,
                "with_ml": self.uses_classifier(),
                "age_boundaries": self.age_boundaries,
            }),
            Stage::Pps => json!({ "pps": self.pps, "age_boundaries": self.age_boundaries }),
            Stage::Evaluate => json!({
                "evaluate": self.evaluate,
                "pps": self.pps,
                "age_boundaries": self.age_boundaries,
            }),
        }
    }

    fn window(&self) -> WindowConfig {
        self.features.window.clone().unwrap_or_else(|| self.synth.window.clone())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageManifest {
    pub stage: Stage,
    pub seed: u64,
    pub config_sha256: String,
    /// Input path (relative to the output directory when inside it) → hash.
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub seed: u64,
    pub stages: Vec<Stage>,
    pub config_sha256: String,
    /// Every artifact in the output directory written by a listed stage.
    pub artifacts: BTreeMap<String, String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PipelineReport {
    pub executed: Vec<Stage>,
    pub skipped: Vec<Stage>,
}

pub fn manifest_name(stage: Stage) -> String {
    format!("manifest_{stage}.json")
}

pub const RUN_MANIFEST: &str = "manifest.json";

/// Runs the configured stages in `out_dir` on a pool of `threads` workers
/// (rayon's default when `None`).
pub fn run_pipeline(cfg: &PipelineConfig, out_dir: &Path, threads: Option<usize>) -> Result<PipelineReport> {
    cfg.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        builder = builder.num_threads(t);
    }
    let pool = builder.build().map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
    pool.install(|| Runner { cfg, out: out_dir }.run())
}

struct Runner<'a> {
    cfg: &'a PipelineConfig,
    out: &'a Path,
}

impl Runner<'_> {
    fn run(&self) -> Result<PipelineReport> {
        std::fs::create_dir_all(self.out).map_err(|e| Error::file(self.out, e))?;
        let mut report = PipelineReport::default();
        let mut artifacts = BTreeMap::new();
        for stage in self.cfg.ordered_stages() {
            let inputs = self.inputs(stage);
            let config_sha256 = sha256_bytes(self.cfg.stage_config(stage).to_string().as_bytes());
            let seed = derive_seed(self.cfg.seed, stage.name());
            let mut input_hashes = BTreeMap::new();
            for (key, path) in &inputs {
                if !path.is_file() {
                    return Err(Error::Stage {
                        stage: stage.to_string(),
                        message: format!("missing input {}", path.display()),
                    });
                }
                input_hashes.insert(key.clone(), sha256_file(path)?);
            }
            let manifest_path = self.out.join(manifest_name(stage));
            let manifest = match self.up_to_date(&manifest_path, stage, seed, &config_sha256, &input_hashes)? {
                Some(m) => {
                    report.skipped.push(stage);
                    m
                }
                None => {
                    let outputs = self.execute(stage, seed).map_err(|e| match e {
                        Error::Stage { .. } => e,
                        other => Error::Stage { stage: stage.to_string(), message: other.to_string() },
                    })?;
                    let mut output_hashes = BTreeMap::new();
                    for name in outputs {
                        let hash = sha256_file(&self.out.join(&name))?;
                        output_hashes.insert(name, hash);
                    }
                    let m = StageManifest { stage, seed, config_sha256, inputs: input_hashes, outputs: output_hashes };
                    write_json(&manifest_path, &m)?;
                    report.executed.push(stage);
                    m
                }
            };
            artifacts.extend(manifest.outputs);
        }
        let run = RunManifest {
            seed: self.cfg.seed,
            stages: self.cfg.ordered_stages(),
            config_sha256: sha256_bytes(self.cfg.to_toml_string()?.as_bytes()),
            artifacts,
        };
        write_json(&self.out.join(RUN_MANIFEST), &run)?;
        Ok(report)
    }

    /// The stored manifest when configuration, inputs and outputs all
    /// still match.
    fn up_to_date(
        &self,
        path: &Path,
        stage: Stage,
        seed: u64,
        config_sha256: &str,
        inputs: &BTreeMap<String, String>,
    ) -> Result<Option<StageManifest>> {
        if !path.is_file() {
            return Ok(None);
        }
        let Ok(m) = serde_json::from_str::<StageManifest>(&read_to_string(path)?) else {
            return Ok(None);
        };
        if m.stage != stage || m.seed != seed || m.config_sha256 != config_sha256 || &m.inputs != inputs {
            return Ok(None);
        }
        for (name, hash) in &m.outputs {
            let p = self.out.join(name);
            if !p.is_file() || &sha256_file(&p)? != hash {
                return Ok(None);
            }
        }
        Ok(Some(m))
    }

    fn local(&self, names: &[&str]) -> Vec<(String, PathBuf)> {
        names.iter().map(|n| (n.to_string(), self.out.join(n))).collect()
    }

    fn methods(&self) -> Vec<Method> {
        let mut m = self.cfg.pps.methods.clone();
        m.sort_unstable();
        m.dedup();
        m
    }

    fn diffusion_methods(&self) -> Vec<Method> {
        let mut out = vec![Method::Rdif];
        if self.cfg.uses_classifier() {
            out.push(Method::MlRdif);
        }
        out
    }

    fn inputs(&self, stage: Stage) -> Vec<(String, PathBuf)> {
        match stage {
            Stage::Synth => Vec::new(),
            Stage::Ingest => {
                let i = &self.cfg.ingest;
                [("cdr", &i.cdr), ("sms", &i.sms), ("labels", &i.labels)]
                    .into_iter()
                    .map(|(k, p)| (format!("ingest:{k}"), p.clone()))
                    .collect()
            }
            Stage::Features => self.local(&[artifact::CALLS, artifact::SMS]),
            Stage::Stats => {
                self.local(&[artifact::CALLS, artifact::LABELS, artifact::GRAPH, artifact::FEATURES])
            }
            Stage::Classify => self.local(&[artifact::FEATURES, artifact::LABELS]),
            Stage::Diffuse => {
                let mut v = self.local(&[artifact::GRAPH, artifact::LABELS]);
                if self.cfg.uses_classifier() {
                    v.extend(self.local(&[artifact::ML_PROBS]));
                }
                v
            }
            Stage::Pps => {
                let mut v = self.local(&[artifact::GRAPH, artifact::LABELS]);
                for m in self.methods() {
                    match m {
                        Method::Ml => v.extend(self.local(&[artifact::ML_PROBS])),
                        Method::Rdif | Method::MlRdif => {
                            let name = artifact::state(m.name());
                            v.push((name.clone(), self.out.join(name)));
                        }
                        Method::Baseline => {}
                    }
                }
                v
            }
            Stage::Evaluate => {
                let mut v = self.local(&[artifact::GRAPH, artifact::LABELS]);
                for m in self.methods() {
                    for &q in &self.cfg.pps.qs {
                        let name = artifact::pps(m.name(), q);
                        v.push((name.clone(), self.out.join(name)));
                    }
                }
                v
            }
        }
    }

    /// Runs one stage; returns the artifact names it wrote.
    fn execute(&self, stage: Stage, seed: u64) -> Result<Vec<String>> {
        let cfg = self.cfg;
        let out = self.out;
        let boundaries = cfg.boundaries()?;
        match stage {
            Stage::Synth => {
                let synth = SynthConfig { rng_seed: seed, ..cfg.synth.clone() };
                stages::synthesize(&synth, out)?;
                self.ingest_local(&boundaries)
            }
            Stage::Ingest => {
                let offset = stages::utc_offset(cfg.ingest.utc_offset_minutes)?;
                let calls = stages::load_calls(&cfg.ingest.cdr, offset)?;
                let sms = stages::load_sms(&cfg.ingest.sms, offset)?;
                let labels = stages::load_labels(&cfg.ingest.labels, boundaries.clone())?;
                create_with(&out.join(artifact::CALLS), |w| crate::features::write_cdr_csv(&calls, w))?;
                create_with(&out.join(artifact::SMS), |w| crate::features::write_sms_csv(&sms, w))?;
                create_with(&out.join(artifact::LABELS), |w| labels.write_csv(w))?;
                self.ingest_local(&boundaries)
            }
            Stage::Features => {
                let calls = stages::load_calls(&out.join(artifact::CALLS), stages::utc_offset(0)?)?;
                let sms = stages::load_sms(&out.join(artifact::SMS), stages::utc_offset(0)?)?;
                let opts = ExtractOptions { window: cfg.window().window()?, day_split: cfg.features.day_split };
                let (raw, pre, _) = stages::compute_features(&calls, &sms, &opts)?;
                let pca = if cfg.features.pca_k > 0 && pre.n_rows() > 1 {
                    Some(stages::pca_on(&pre, cfg.features.pca_columns, cfg.features.pca_k)?)
                } else {
                    None
                };
                stages::write_feature_artifacts(&raw, &pre, pca.as_ref(), out)?;
                let mut names = vec![artifact::FEATURES_RAW, artifact::FEATURES, artifact::SKEW];
                if pca.is_some() {
                    names.push(artifact::PCA);
                }
                Ok(names.into_iter().map(String::from).collect())
            }
            Stage::Stats => {
                let calls = stages::load_calls(&out.join(artifact::CALLS), stages::utc_offset(0)?)?;
                let labels = stages::load_labels(&out.join(artifact::LABELS), boundaries)?;
                let g = stages::load_graph(&out.join(artifact::GRAPH))?;
                let features = stages::load_features(&out.join(artifact::FEATURES))?;
                let s = stages::observational_stats(&calls, &labels, &g, &features, &cfg.stats, seed)?;
                stages::write_stats_artifacts(&s, out)?;
                Ok([
                    artifact::STATS_SUMMARY,
                    artifact::TUKEY,
                    artifact::BOOTSTRAP,
                    artifact::HOMOPHILY_COMM,
                    artifact::HOMOPHILY_NULL,
                    artifact::HOMOPHILY_LOG_DIFF,
                    artifact::DELTA_CURVE,
                ]
                .map(String::from)
                .to_vec())
            }
            Stage::Classify => {
                let features = stages::load_features(&out.join(artifact::FEATURES))?;
                let labels = stages::load_labels(&out.join(artifact::LABELS), boundaries)?;
                let ks: Vec<Option<usize>> = cfg.classify.ks.iter().map(|&k| (k > 0).then_some(k)).collect();
                let points = grid(&cfg.classify.cs, &ks, &cfg.classify.penalties);
                let c = stages::train_classifier(
                    &features,
                    &labels,
                    stages::Target::Age,
                    &points,
                    cfg.classify.split,
                    seed,
                )?;
                stages::write_classify_artifacts(&c, out)?;
                Ok([artifact::MODEL, artifact::GRID, artifact::ML_PROBS].map(String::from).to_vec())
            }
            Stage::Diffuse => {
                let g = stages::load_graph(&out.join(artifact::GRAPH))?;
                let labels = stages::load_labels(&out.join(artifact::LABELS), boundaries)?;
                let node_labels = NodeLabels::from_store(&g, &labels)?;
                let ml = if cfg.uses_classifier() {
                    Some(stages::load_predictions(&out.join(artifact::ML_PROBS))?)
                } else {
                    None
                };
                let mut names = Vec::new();
                for m in self.diffusion_methods() {
                    let mode = if m == Method::MlRdif { InitMode::Ml } else { InitMode::Uniform };
                    let d = Diffusion::new(&g, &node_labels, cfg.diffuse.to_diffusion(mode), ml.as_ref())?;
                    let run = d.run(Some(&node_labels));
                    stages::write_diffusion_artifacts(&g, &run, m.name(), out)?;
                    names.push(artifact::state(m.name()));
                    names.push(artifact::trace(m.name()));
                }
                Ok(names)
            }
            Stage::Pps => {
                let g = stages::load_graph(&out.join(artifact::GRAPH))?;
                let labels = stages::load_labels(&out.join(artifact::LABELS), boundaries)?;
                let node_labels = NodeLabels::from_store(&g, &labels)?;
                let pyramid = match &cfg.pps.pyramid {
                    Some(p) => p.clone(),
                    None => labels.category_distribution(Role::Seed),
                };
                create_with(&out.join(artifact::PYRAMID), |w| write_pyramid_csv(&pyramid, w))?;
                let mut names = vec![artifact::PYRAMID.to_owned()];
                for m in self.methods() {
                    let rows = self.method_rows(m, &g, &pyramid)?;
                    for &q in &cfg.pps.qs {
                        let (assignment, _) = stages::pps_non_seeds(&g, &node_labels, &rows, q, &pyramid)?;
                        let name = artifact::pps(m.name(), q);
                        create_with(&out.join(&name), |w| assignment.write_csv(w))?;
                        names.push(name);
                    }
                }
                Ok(names)
            }
            Stage::Evaluate => self.evaluate_stage(&boundaries),
        }
    }

    /// Graph building shared by both data sources.
    fn ingest_local(&self, boundaries: &AgeBoundaries) -> Result<Vec<String>> {
        let out = self.out;
        let calls = stages::load_calls(&out.join(artifact::CALLS), stages::utc_offset(0)?)?;
        let sms = stages::load_sms(&out.join(artifact::SMS), stages::utc_offset(0)?)?;
        let labels = stages::load_labels(&out.join(artifact::LABELS), boundaries.clone())?;
        let (pruned, report) = stages::build_pruned_graph(&calls, &sms, &labels, self.cfg.graph.max_degree)?;
        stages::write_graph_artifacts(&pruned, &report, out)?;
        Ok([artifact::CALLS, artifact::SMS, artifact::LABELS, artifact::GRAPH, artifact::GRAPH_REPORT]
            .map(String::from)
            .to_vec())
    }

    /// Probability rows per graph node for `m`.
    fn method_rows(&self, m: Method, g: &crate::graph::SocialGraph, pyramid: &[f64]) -> Result<Vec<Vec<f64>>> {
        let out = self.out;
        match m {
            Method::Ml => stages::rows_for_graph(g, &stages::load_predictions(&out.join(artifact::ML_PROBS))?),
            Method::Rdif | Method::MlRdif => {
                let p = PredictionSet::read_csv(open(&out.join(artifact::state(m.name())))?)?;
                stages::rows_for_graph(g, &p)
            }
            Method::Baseline => Ok(vec![pyramid.to_vec(); g.node_count()]),
        }
    }

    fn evaluate_stage(&self, boundaries: &AgeBoundaries) -> Result<Vec<String>> {
        let cfg = self.cfg;
        let out = self.out;
        let g = stages::load_graph(&out.join(artifact::GRAPH))?;
        let labels = stages::load_labels(&out.join(artifact::LABELS), boundaries.clone())?;
        let node_labels = NodeLabels::from_store(&g, &labels)?;
        let seeds: Vec<NodeId> = g.nodes().filter(|x| node_labels.is_seed(x.index())).collect();
        let metrics = compute_topo_metrics(&g, &seeds)?;
        let buckets = DegreeBuckets::new(cfg.evaluate.degree_buckets.clone())?;
        let names = boundaries.labels();

        let mut accuracy = MethodTable::new(cfg.pps.qs.clone());
        let mut coverage = MethodTable::new(cfg.pps.qs.clone());
        let mut pps_reports = Vec::new();
        for m in self.methods() {
            let (mut acc, mut cov) = (Vec::new(), Vec::new());
            for &q in &cfg.pps.qs {
                let pred = stages::load_assignments(&out.join(artifact::pps(m.name(), q)), &g)?;
                let r = evaluate(&g, &node_labels, &pred, &metrics, &buckets, &names)?;
                acc.push(r.overall.accuracy());
                cov.push(Some(r.coverage));
                pps_reports.push(PpsEntry { method: m, q, accuracy: r.overall.accuracy(), coverage: r.coverage });
            }
            accuracy.push(m.name(), acc)?;
            coverage.push(m.name(), cov)?;
        }
        create_with(&out.join(artifact::ACCURACY_BY_Q), |w| accuracy.write_csv(w))?;
        create_with(&out.join(artifact::COVERAGE_BY_Q), |w| coverage.write_csv(w))?;

        // argmax reports for the diffusion states that exist for this config
        let mut argmax = BTreeMap::new();
        for m in self.diffusion_methods() {
            let path = out.join(artifact::state(m.name()));
            if !path.is_file() {
                continue;
            }
            let rows = stages::rows_for_graph(&g, &PredictionSet::read_csv(open(&path)?)?)?;
            let pred: Vec<Option<usize>> = rows.iter().map(|r| Some(crate::classify::argmax(r))).collect();
            argmax.insert(m.name().to_owned(), evaluate(&g, &node_labels, &pred, &metrics, &buckets, &names)?);
        }
        write_json(&out.join(artifact::EVAL_REPORT), &EvalSummary { argmax: argmax.clone(), pps: pps_reports })?;
        let mut written = vec![artifact::ACCURACY_BY_Q, artifact::COVERAGE_BY_Q, artifact::EVAL_REPORT];
        if let Some(r) = argmax.get(Method::Rdif.name()) {
            create_with(&out.join(artifact::EVAL_STRATA), |w| r.write_csv(w))?;
            written.push(artifact::EVAL_STRATA);
        }
        Ok(written.into_iter().map(String::from).collect())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PpsEntry {
    pub method: Method,
    pub q: f64,
    pub accuracy: Option<f64>,
    pub coverage: f64,
}

/// Contents of the evaluation JSON report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    /// Stratified report of each diffusion state's argmax.
    pub argmax: BTreeMap<String, EvalReport>,
    pub pps: Vec<PpsEntry>,
}

/// Reads a pyramid file when given, otherwise returns `None`.
pub fn load_pyramid(path: Option<&Path>) -> Result<Option<Vec<f64>>> {
    path.map(|p| files::in_file(p, read_pyramid_csv(open(p)?))).transpose()
}
