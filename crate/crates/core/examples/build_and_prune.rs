//! Builds a contact graph from synthetic call records, prunes it around the
//! seed users and prints topological metrics.
//!
//! ```sh
//! cargo run --release --example build_and_prune -- 20000
//! ```

use cdr_demographics::graph::{build_graph, compute_topo_metrics, connected_components, prune_graph, NodeId, DEFAULT_MAX_DEGREE};
use cdr_demographics::labels::Role;
use cdr_demographics::synth::{generate_events, generate_graph, generate_population, SynthConfig};

fn main() -> cdr_demographics::Result<()> {
    let population = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(20_000);
    let cfg = SynthConfig { population, ..SynthConfig::default() };
    let store = generate_population(&cfg)?;
    let generated = generate_graph(&store, &cfg)?;
    let events = generate_events(&generated, &store, &cfg, &cfg.window.window()?)?;

    let mut contacts: Vec<(&str, &str)> = events.calls.iter().map(|c| (c.caller.as_str(), c.callee.as_str())).collect();
    contacts.extend(events.sms.iter().map(|s| (s.sender.as_str(), s.receiver.as_str())));
    let g = build_graph(&contacts);
    println!("{} records -> {} nodes, {} edges", contacts.len(), g.node_count(), g.edge_count());

    let seeds: Vec<NodeId> = store.with_role(Role::Seed).filter_map(|u| g.node_id(&u.user_id)).collect();
    let pruned = prune_graph(&g, &seeds, DEFAULT_MAX_DEGREE)?;
    let r = &pruned.report;
    println!(
        "pruned: {} nodes, {} edges; removed {} above degree {}, {} without a seed",
        pruned.graph.node_count(),
        pruned.graph.edge_count(),
        r.removed_high_degree,
        DEFAULT_MAX_DEGREE,
        r.removed_seedless
    );
    let mut roots = connected_components(&pruned.graph);
    roots.sort_unstable();
    roots.dedup();
    println!("components after pruning: {}", roots.len());

    let m = compute_topo_metrics(&pruned.graph, &pruned.seeds)?;
    let max_dts = m.dts.iter().copied().filter(|&d| d != u32::MAX).max().unwrap_or(0);
    for d in 0..=max_dts {
        let n = m.dts.iter().filter(|&&x| x == d).count();
        println!("dts {d}: {n} nodes");
    }
    let mean_sin = m.sin.iter().map(|&s| f64::from(s)).sum::<f64>() / m.sin.len() as f64;
    println!("mean seeds in neighborhood: {mean_sin:.3}");
    Ok(())
}
