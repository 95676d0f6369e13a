//! Validation accuracy of reaction-diffusion across the mixing weight λ and
//! per iteration at λ = 0.5.
//!
//! ```sh
//! cargo run --release --example lambda_sensitivity -- 50000
//! ```

use cdr_demographics::diffusion::{lambda_sweep, Diffusion, DiffusionConfig, NodeLabels};
use cdr_demographics::graph::{prune_graph, NodeId, DEFAULT_MAX_DEGREE};
use cdr_demographics::labels::Role;
use cdr_demographics::synth::{generate_graph, generate_population, SynthConfig};

fn main() -> cdr_demographics::Result<()> {
    let population = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(50_000);
    let cfg = SynthConfig { population, validation_fraction: 0.9, ..SynthConfig::default() };
    let store = generate_population(&cfg)?;
    let full = generate_graph(&store, &cfg)?;
    let seeds: Vec<NodeId> = store.with_role(Role::Seed).filter_map(|u| full.node_id(&u.user_id)).collect();
    let pruned = prune_graph(&full, &seeds, DEFAULT_MAX_DEGREE)?;
    let labels = NodeLabels::from_store(&pruned.graph, &store)?;

    let lambdas: Vec<f64> = (0..=10).map(|i| f64::from(i) / 10.0).collect();
    let base = DiffusionConfig::default();
    for p in lambda_sweep(&pruned.graph, &labels, &lambdas, base, None)? {
        println!("lambda {:.1}: accuracy {:.4} after {} iterations (converged {})", p.lambda, p.accuracy, p.iterations, p.converged);
    }

    let run = Diffusion::new(&pruned.graph, &labels, base, None)?.run(Some(&labels));
    for e in run.trace.entries.iter().take(10) {
        println!("iteration {:>2}: delta {:.2e}, accuracy {:.4}", e.iteration, e.delta_inf, e.validation_accuracy.unwrap_or(f64::NAN));
    }
    Ok(())
}
