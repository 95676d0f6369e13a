//! Command-line front end. [`run`] parses arguments and returns the
//! process exit code: 0 on success, 1 for usage errors, 2 for data errors.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::classify::{default_grid, grid, GridPoint, Penalty, PredictionSet};
use crate::diffusion::{Diffusion, DiffusionConfig, InitMode, NodeLabels};
use crate::error::Error;
use crate::eval::{evaluate, DegreeBuckets};
use crate::features::{DaySplit, ExtractOptions};
use crate::graph::{compute_topo_metrics, NodeId};
use crate::labels::{AgeBoundaries, Role};
use crate::pipeline::files::{create_with, read_to_string, write_json};
use crate::pipeline::stages::{self, artifact, ColumnSet, StatsConfig, Target};
use crate::pipeline::{load_pyramid, run_pipeline, PipelineConfig};
use crate::pps::{compute_quotas, pps_assign, DEFAULT_PYRAMID};
use crate::rng::derive_seed;
use crate::synth::{SynthConfig, WindowConfig};

const DEFAULT_SEED: u64 = 7;

#[derive(Debug, Parser)]
#[command(name = "cdr-demographics", version, about = "Age and gender inference on mobile call graphs")]
pub struct Cli {
    /// Master seed; every random draw derives from it.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Directory for outputs.
    #[arg(long, global = true, default_value = "out")]
    pub out_dir: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic labeled population with call and SMS records.
    Synth(SynthArgs),
    /// Read records and labels, build and prune the contact graph.
    Ingest(IngestArgs),
    /// Extract and preprocess the per-user feature table.
    Features(FeaturesArgs),
    /// Principal components of a feature column family.
    Pca(PcaArgs),
    /// Gender mixing, bootstrap, Tukey HSD and age homophily.
    Stats(StatsArgs),
    /// Grid-searched logistic classifier for age or gender.
    Train(TrainArgs),
    /// Reaction-diffusion of age probabilities over the graph.
    Diffuse(DiffuseArgs),
    /// Collapse probabilities to labels under pyramid quotas.
    Pps(PpsArgs),
    /// Stratified accuracy of predictions on validation users.
    Evaluate(EvaluateArgs),
    /// Run the staged experiment described by a config file.
    Pipeline(PipelineArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// TOML generator config; defaults when absent.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override the population size.
    #[arg(long)]
    pub population: Option<usize>,
}

#[derive(Debug, Args)]
pub struct LabelArgs {
    #[arg(long)]
    pub labels: PathBuf,
    /// Lower bounds of the age categories after the first.
    #[arg(long, value_delimiter = ',', default_value = "25,35,50")]
    pub age_boundaries: Vec<u32>,
}

impl LabelArgs {
    fn load(&self) -> crate::Result<crate::labels::LabelStore> {
        stages::load_labels(&self.labels, AgeBoundaries::new(self.age_boundaries.clone())?)
    }
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long)]
    pub cdr: PathBuf,
    #[arg(long)]
    pub sms: PathBuf,
    #[command(flatten)]
    pub labels: LabelArgs,
    #[arg(long, default_value_t = crate::graph::DEFAULT_MAX_DEGREE)]
    pub max_degree: usize,
    /// Local offset for timestamps that carry a zone.
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    pub utc_offset_minutes: i32,
}

#[derive(Debug, Args)]
pub struct FeaturesArgs {
    #[arg(long)]
    pub cdr: PathBuf,
    #[arg(long)]
    pub sms: PathBuf,
    /// First day of the observation window, `YYYY-MM-DD`.
    #[arg(long, default_value = "2015-01-01")]
    pub window_start: chrono::NaiveDate,
    #[arg(long, default_value_t = 3)]
    pub months: u32,
    #[arg(long, default_value_t = 7)]
    pub daylight_start: u32,
    #[arg(long, default_value_t = 19)]
    pub daylight_end: u32,
}

#[derive(Debug, Args)]
pub struct PcaArgs {
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    /// raw, log, scaled-raw, scaled-log or scaled.
    #[arg(long, default_value = "scaled-log")]
    pub columns: ColumnSet,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long)]
    pub cdr: PathBuf,
    #[command(flatten)]
    pub labels: LabelArgs,
    #[arg(long)]
    pub graph: PathBuf,
    /// Preprocessed feature table.
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long, default_value_t = 400)]
    pub resamples: usize,
    #[arg(long, default_value_t = 0.05)]
    pub fwer: f64,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub features: PathBuf,
    #[command(flatten)]
    pub labels: LabelArgs,
    /// age or gender.
    #[arg(long)]
    pub target: Target,
    /// `c=0.1,1;k=10,all;penalty=l1,l2`; omitted axes take their defaults.
    #[arg(long)]
    pub grid: Option<String>,
    #[arg(long, default_value_t = 0.7)]
    pub split: f64,
}

#[derive(Debug, Args)]
pub struct DiffuseArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[command(flatten)]
    pub labels: LabelArgs,
    #[arg(long, default_value_t = 0.5)]
    pub lambda: f64,
    #[arg(long, default_value_t = 30)]
    pub iters: usize,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    /// uniform or ml.
    #[arg(long, default_value = "uniform")]
    pub mode: InitMode,
    #[arg(long)]
    pub ml_probs: Option<PathBuf>,
    /// State CSV; `state_<mode>.csv` in the output directory by default.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PpsArgs {
    /// Probability CSV `user_id,p_0,...`.
    #[arg(long)]
    pub probs: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    pub q: f64,
    /// Pyramid CSV `category,fraction`; a built-in four-group pyramid when absent.
    #[arg(long)]
    pub pyramid: Option<PathBuf>,
    /// Label file; its seed users are excluded from assignment.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[command(flatten)]
    pub labels: LabelArgs,
    /// PPS assignments CSV.
    #[arg(long, conflicts_with = "state", required_unless_present = "state")]
    pub assignments: Option<PathBuf>,
    /// Probability state CSV evaluated by argmax.
    #[arg(long)]
    pub state: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "2,29,48,66,100")]
    pub degree_buckets: Vec<u32>,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    /// TOML pipeline config.
    #[arg(long)]
    pub config: PathBuf,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Data(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) => Failure::Usage(e.to_string()),
            other => Failure::Data(other),
        }
    }
}

type CliResult = std::result::Result<(), Failure>;

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            1
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn execute(cli: &Cli) -> CliResult {
    if cli.threads == Some(0) {
        return Err(Failure::Usage("--threads must be at least 1".into()));
    }
    if let Command::Pipeline(a) = &cli.command {
        return pipeline(cli, a);
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cli.threads {
        builder = builder.num_threads(t);
    }
    let pool = builder.build().map_err(|e| Failure::Usage(e.to_string()))?;
    pool.install(|| dispatch(cli))
}

fn dispatch(cli: &Cli) -> CliResult {
    let seed = cli.seed.unwrap_or(DEFAULT_SEED);
    let out = cli.out_dir.as_path();
    match &cli.command {
        Command::Synth(a) => synth(cli, a),
        Command::Ingest(a) => {
            let offset = stages::utc_offset(a.utc_offset_minutes)?;
            let calls = stages::load_calls(&a.cdr, offset)?;
            let sms = stages::load_sms(&a.sms, offset)?;
            let labels = a.labels.load()?;
            let (pruned, report) = stages::build_pruned_graph(&calls, &sms, &labels, a.max_degree)?;
            stages::write_graph_artifacts(&pruned, &report, out)?;
            println!(
                "graph: {} nodes / {} edges after pruning ({} / {} before); {} seeds",
                report.nodes, report.edges, report.nodes_before, report.edges_before, report.seeds
            );
            Ok(())
        }
        Command::Features(a) => {
            let offset = stages::utc_offset(0)?;
            let calls = stages::load_calls(&a.cdr, offset)?;
            let sms = stages::load_sms(&a.sms, offset)?;
            let window = WindowConfig { start: a.window_start, months: a.months }.window()?;
            let day_split = DaySplit { daylight_start_hour: a.daylight_start, daylight_end_hour: a.daylight_end };
            if day_split.daylight_start_hour >= day_split.daylight_end_hour || day_split.daylight_end_hour > 24 {
                return Err(Failure::Usage("daylight hours must satisfy start < end <= 24".into()));
            }
            let (raw, pre, skipped) = stages::compute_features(&calls, &sms, &ExtractOptions { window, day_split })?;
            stages::write_feature_artifacts(&raw, &pre, None, out)?;
            println!("features: {} users x {} columns; {skipped} records outside the window", pre.n_rows(), pre.n_cols());
            Ok(())
        }
        Command::Pca(a) => {
            let m = stages::load_features(&a.features)?;
            let r = stages::pca_on(&m, a.columns, a.k)?;
            write_json(&out.join(artifact::PCA), &r)?;
            for (i, v) in r.explained_variance_ratio.iter().enumerate() {
                println!("pc{}: {:.4}", i + 1, v);
            }
            Ok(())
        }
        Command::Stats(a) => {
            let calls = stages::load_calls(&a.cdr, stages::utc_offset(0)?)?;
            let labels = a.labels.load()?;
            let g = stages::load_graph(&a.graph)?;
            let features = stages::load_features(&a.features)?;
            let cfg = StatsConfig { bootstrap_resamples: a.resamples, fwer: a.fwer, ..StatsConfig::default() };
            let s = stages::observational_stats(&calls, &labels, &g, &features, &cfg, derive_seed(seed, "stats"))?;
            stages::write_stats_artifacts(&s, out)?;
            for w in &s.summary.warnings {
                eprintln!("warning: {w}");
            }
            Ok(())
        }
        Command::Train(a) => {
            let features = stages::load_features(&a.features)?;
            let labels = a.labels.load()?;
            let points = match &a.grid {
                Some(spec) => parse_grid(spec).map_err(Failure::Usage)?,
                None => default_grid(),
            };
            let c = stages::train_classifier(&features, &labels, a.target, &points, a.split, derive_seed(seed, "classify"))?;
            stages::write_classify_artifacts(&c, out)?;
            let b = &c.grid.best;
            println!(
                "best: penalty={:?} C={} k={} validation accuracy {:.4}",
                b.penalty, b.c, b.k, b.validation_accuracy
            );
            Ok(())
        }
        Command::Diffuse(a) => {
            let g = stages::load_graph(&a.graph)?;
            let labels = a.labels.load()?;
            let node_labels = NodeLabels::from_store(&g, &labels)?;
            let ml = a.ml_probs.as_deref().map(stages::load_predictions).transpose()?;
            if a.mode == InitMode::Ml && ml.is_none() {
                return Err(Failure::Usage("--mode ml needs --ml-probs".into()));
            }
            let config = DiffusionConfig { lambda: a.lambda, max_iterations: a.iters, convergence_tol: a.tol, mode: a.mode };
            config.validate().map_err(|e| Failure::Usage(e.to_string()))?;
            let run = Diffusion::new(&g, &node_labels, config, ml.as_ref())?.run(Some(&node_labels));
            let method = if a.mode == InitMode::Ml { "ml_rdif" } else { "rdif" };
            let state_path = a.out.clone().unwrap_or_else(|| out.join(artifact::state(method)));
            let trace_path = state_path.with_file_name(artifact::trace(method));
            create_with(&state_path, |w| run.state.write_csv(&g, w))?;
            create_with(&trace_path, |w| run.trace.write_csv(w))?;
            for w in &run.warnings {
                eprintln!("warning: {w}");
            }
            let last = run.trace.entries.last();
            println!(
                "diffusion: {} iterations, converged={}, validation accuracy {}",
                last.map_or(0, |e| e.iteration),
                run.trace.converged,
                last.and_then(|e| e.validation_accuracy).map_or("n/a".into(), |v| format!("{v:.4}"))
            );
            Ok(())
        }
        Command::Pps(a) => {
            let mut probs = stages::load_predictions(&a.probs)?;
            if let Some(path) = &a.labels {
                let store = stages::load_labels(path, AgeBoundaries::default())?;
                let keep: Vec<usize> = (0..probs.user_ids.len())
                    .filter(|&i| store.get(&probs.user_ids[i]).is_none_or(|u| u.role != Role::Seed))
                    .collect();
                probs = PredictionSet::from_rows(
                    keep.iter().map(|&i| probs.user_ids[i].clone()).collect(),
                    keep.iter().map(|&i| probs.prob[i].clone()).collect(),
                )?;
            }
            let pyramid = load_pyramid(a.pyramid.as_deref())?.unwrap_or_else(|| DEFAULT_PYRAMID.to_vec());
            let spec = compute_quotas(probs.user_ids.len(), a.q, &pyramid).map_err(|e| Failure::Usage(e.to_string()))?;
            let assignment = pps_assign(&probs, &spec)?;
            let path = a.out.clone().unwrap_or_else(|| out.join("assignments.csv"));
            create_with(&path, |w| assignment.write_csv(w))?;
            println!("pps: assigned {} of {} users, quotas {:?}", assignment.assigned_count(), probs.user_ids.len(), spec.quotas);
            Ok(())
        }
        Command::Evaluate(a) => {
            let g = stages::load_graph(&a.graph)?;
            let boundaries = AgeBoundaries::new(a.labels.age_boundaries.clone())?;
            let labels = a.labels.load()?;
            let node_labels = NodeLabels::from_store(&g, &labels)?;
            let pred: Vec<Option<usize>> = match (&a.assignments, &a.state) {
                (Some(p), _) => stages::load_assignments(p, &g)?,
                (None, Some(p)) => stages::rows_for_graph(&g, &stages::load_predictions(p)?)?
                    .iter()
                    .map(|r| Some(crate::classify::argmax(r)))
                    .collect(),
                (None, None) => return Err(Failure::Usage("pass --assignments or --state".into())),
            };
            let seeds: Vec<NodeId> = g.nodes().filter(|x| node_labels.is_seed(x.index())).collect();
            let metrics = compute_topo_metrics(&g, &seeds)?;
            let buckets = DegreeBuckets::new(a.degree_buckets.clone()).map_err(|e| Failure::Usage(e.to_string()))?;
            let report = evaluate(&g, &node_labels, &pred, &metrics, &buckets, &boundaries.labels())?;
            write_json(&out.join(artifact::EVAL_REPORT), &report)?;
            create_with(&out.join(artifact::EVAL_STRATA), |w| report.write_csv(w))?;
            println!(
                "accuracy {} over {} predicted of {} validation users (coverage {:.4})",
                report.overall.accuracy().map_or("n/a".into(), |v| format!("{v:.4}")),
                report.overall.predicted,
                report.overall.population,
                report.coverage
            );
            Ok(())
        }
        Command::Pipeline(_) => unreachable!("handled before the pool is built"),
    }
}

fn synth(cli: &Cli, a: &SynthArgs) -> CliResult {
    let mut cfg = match &a.config {
        Some(p) => SynthConfig::from_toml_str(&read_to_string(p)?)?,
        None => SynthConfig::default(),
    };
    if let Some(n) = a.population {
        cfg.population = n;
    }
    if let Some(s) = cli.seed {
        cfg.rng_seed = derive_seed(s, "synth");
    }
    cfg.validate()?;
    let s = stages::synthesize(&cfg, &cli.out_dir)?;
    println!("synth: {} users, {} edges, {} calls, {} sms", s.users, s.generated_edges, s.calls, s.sms);
    Ok(())
}

fn pipeline(cli: &Cli, a: &PipelineArgs) -> CliResult {
    let mut cfg = PipelineConfig::from_file(&a.config)?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    let report = run_pipeline(&cfg, &cli.out_dir, cli.threads)?;
    let names = |v: &[crate::pipeline::Stage]| v.iter().map(|s| s.name()).collect::<Vec<_>>().join(",");
    println!("executed: [{}] skipped: [{}]", names(&report.executed), names(&report.skipped));
    Ok(())
}

/// Parses `c=0.1,1;k=10,all;penalty=l1,l2`.
pub fn parse_grid(spec: &str) -> std::result::Result<Vec<GridPoint>, String> {
    let mut cs = vec![0.1, 0.3, 1.0, 3.0, 10.0];
    let mut ks = vec![Some(10), Some(30), None];
    let mut penalties = vec![Penalty::L1, Penalty::L2];
    for part in spec.split(';').map(str::trim).filter(|p| !p.is_empty()) {
        let (key, values) = part.split_once('=').ok_or_else(|| format!("grid axis {part:?} lacks '='"))?;
        let items: Vec<&str> = values.split(',').map(str::trim).filter(|v| !v.is_empty()).collect();
        if items.is_empty() {
            return Err(format!("grid axis {key} is empty"));
        }
        match key.trim() {
            "c" | "C" => {
                cs = items
                    .iter()
                    .map(|v| v.parse::<f64>().map_err(|e| format!("bad C {v:?}: {e}")))
                    .collect::<std::result::Result<_, _>>()?;
            }
            "k" => {
                ks = items
                    .iter()
                    .map(|v| match *v {
                        "all" => Ok(None),
                        v => v.parse::<usize>().map(Some).map_err(|e| format!("bad k {v:?}: {e}")),
                    })
                    .collect::<std::result::Result<_, _>>()?;
            }
            "penalty" => {
                penalties = items.iter().map(|v| v.parse::<Penalty>()).collect::<std::result::Result<_, _>>()?;
            }
            other => return Err(format!("unknown grid axis {other:?}")),
        }
    }
    Ok(grid(&cs, &ks, &penalties))
}
