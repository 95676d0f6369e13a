//! Age inference by reaction-diffusion on a synthetic homophilous graph,
//! followed by PPS at several q and a topological breakdown.
//!
//! ```sh
//! cargo run --release --example age_diffusion -- 100000
//! ```

use std::time::Instant;

use cdr_demographics::classify::PredictionSet;
use cdr_demographics::diffusion::{Diffusion, DiffusionConfig, NodeLabels};
use cdr_demographics::eval::{evaluate, DegreeBuckets};
use cdr_demographics::graph::{compute_topo_metrics, prune_graph, NodeId, DEFAULT_MAX_DEGREE};
use cdr_demographics::labels::Role;
use cdr_demographics::pps::{compute_quotas, pps_assign};
use cdr_demographics::synth::{generate_graph, generate_population, SynthConfig};

fn main() -> cdr_demographics::Result<()> {
    let population = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(20_000);
    let cfg = SynthConfig { population, validation_fraction: 0.9, ..SynthConfig::default() };
    let start = Instant::now();

    let store = generate_population(&cfg)?;
    let full = generate_graph(&store, &cfg)?;
    let seeds: Vec<NodeId> = store.with_role(Role::Seed).filter_map(|u| full.node_id(&u.user_id)).collect();
    let pruned = prune_graph(&full, &seeds, DEFAULT_MAX_DEGREE)?;
    let g = &pruned.graph;
    println!("graph: {} nodes, {} edges after pruning", g.node_count(), g.edge_count());

    let labels = NodeLabels::from_store(g, &store)?;
    let run = Diffusion::new(g, &labels, DiffusionConfig::default(), None)?.run(Some(&labels));
    for e in &run.trace.entries {
        println!("iter {:>2}  delta {:.3e}  accuracy {:.4}", e.iteration, e.delta_inf, e.validation_accuracy.unwrap_or(f64::NAN));
    }

    let seed_pyramid = store.category_distribution(Role::Seed);
    let truth_counts = {
        let mut c = vec![0usize; labels.categories];
        labels.validation.iter().flatten().for_each(|&k| c[k] += 1);
        c
    };
    let best_constant = *truth_counts.iter().max().unwrap() as f64 / labels.validation_count() as f64;
    println!("best constant-class baseline {best_constant:.4}");

    // collapse over validation rows only
    let val_nodes: Vec<usize> = (0..g.node_count()).filter(|&x| labels.validation[x].is_some()).collect();
    let probs = PredictionSet::from_rows(
        val_nodes.iter().map(|&x| g.external_id(NodeId::from(x)).to_owned()).collect(),
        val_nodes.iter().map(|&x| run.state.row(x).to_vec()).collect(),
    )?;
    for q in [1.0, 0.5, 0.25, 0.125] {
        let spec = compute_quotas(val_nodes.len(), q, &seed_pyramid)?;
        let a = pps_assign(&probs, &spec)?;
        let mut pred = vec![None; g.node_count()];
        for (slot, &x) in a.assigned.iter().zip(&val_nodes) {
            pred[x] = *slot;
        }
        let metrics = compute_topo_metrics(g, &pruned.seeds)?;
        let names = store.boundaries().labels();
        let r = evaluate(g, &labels, &pred, &metrics, &DegreeBuckets::default(), &names)?;
        println!("PPS q={q}: accuracy {:.4} coverage {:.3}", r.overall.accuracy().unwrap_or(0.0), r.coverage);
        if q == 1.0 {
            for s in &r.by_dts {
                println!("  dts {:>11}: n={:>6} acc={:.4}", s.label, s.population, s.accuracy().unwrap_or(f64::NAN));
            }
            for s in &r.by_sin {
                println!("  sin {:>3}: n={:>6} acc={:.4}", s.label, s.population, s.accuracy().unwrap_or(f64::NAN));
            }
        }
    }
    let argmax: Vec<Option<usize>> = run.state.argmax().into_iter().map(Some).collect();
    let metrics = compute_topo_metrics(g, &pruned.seeds)?;
    let r = evaluate(g, &labels, &argmax, &metrics, &DegreeBuckets::default(), &store.boundaries().labels())?;
    for s in &r.by_dts {
        println!("argmax dts {:>11}: n={:>6} acc={:.4}", s.label, s.population, s.accuracy().unwrap_or(f64::NAN));
    }
    for s in &r.by_sin {
        println!("argmax sin {:>3}: n={:>6} acc={:.4}", s.label, s.population, s.accuracy().unwrap_or(f64::NAN));
    }
    println!("elapsed {:.2?}", start.elapsed());
    Ok(())
}
