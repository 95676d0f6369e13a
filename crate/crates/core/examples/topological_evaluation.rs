//! Accuracy of diffusion predictions stratified by distance to seeds,
//! seeds in the neighborhood and degree, written as a long-form CSV.
//!
//! ```sh
//! cargo run --release --example topological_evaluation > strata.csv
//! ```

use cdr_demographics::diffusion::{Diffusion, DiffusionConfig, NodeLabels};
use cdr_demographics::eval::{evaluate, DegreeBuckets};
use cdr_demographics::graph::{compute_topo_metrics, prune_graph, NodeId, DEFAULT_MAX_DEGREE};
use cdr_demographics::labels::Role;
use cdr_demographics::synth::{generate_graph, generate_population, SynthConfig};

fn main() -> cdr_demographics::Result<()> {
    let cfg = SynthConfig { population: 30_000, validation_fraction: 0.9, ..SynthConfig::default() };
    let store = generate_population(&cfg)?;
    let full = generate_graph(&store, &cfg)?;
    let seeds: Vec<NodeId> = store.with_role(Role::Seed).filter_map(|u| full.node_id(&u.user_id)).collect();
    let pruned = prune_graph(&full, &seeds, DEFAULT_MAX_DEGREE)?;
    let g = &pruned.graph;
    let labels = NodeLabels::from_store(g, &store)?;

    let run = Diffusion::new(g, &labels, DiffusionConfig::default(), None)?.run(None);
    let pred: Vec<Option<usize>> = run.state.argmax().into_iter().map(Some).collect();
    let metrics = compute_topo_metrics(g, &pruned.seeds)?;
    let report = evaluate(g, &labels, &pred, &metrics, &DegreeBuckets::default(), &store.boundaries().labels())?;
    eprintln!("overall accuracy {:.4}", report.overall.accuracy().unwrap_or(0.0));
    report.write_csv(std::io::stdout().lock())
}
