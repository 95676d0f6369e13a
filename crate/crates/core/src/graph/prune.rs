use serde::{Deserialize, Serialize};

use super::{connected_components, NodeId, SocialGraph};
use crate::error::{Error, Result};

/// Nodes above this many distinct contacts are treated as call centers.
pub const DEFAULT_MAX_DEGREE: usize = 100;

/// Non-fatal findings from [`prune_graph`].
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PruneReport {
    /// Seeds that are not nodes of the input graph.
    pub missing_seeds: Vec<NodeId>,
    /// Seeds removed by the degree filter (ids in the input graph).
    pub dropped_seeds: Vec<NodeId>,
    pub removed_high_degree: usize,
    pub removed_seedless: usize,
}

#[derive(Clone, Debug)]
pub struct Pruned {
    pub graph: SocialGraph,
    /// Id in the input graph of each retained node.
    pub original_ids: Vec<NodeId>,
    /// Surviving seeds, in the pruned graph's ids.
    pub seeds: Vec<NodeId>,
    pub report: PruneReport,
}

/// Remove nodes with degree above `max_degree`, then every component of the
/// remaining graph that holds no seed. Degrees are measured on the input
/// (already symmetrized) graph.
pub fn prune_graph(g: &SocialGraph, seeds: &[NodeId], max_degree: usize) -> Result<Pruned> {
    if max_degree == 0 {
        return Err(Error::invalid("max_degree must be at least 1"));
    }
    let n = g.node_count();
    let mut report = PruneReport::default();

    let keep_degree: Vec<bool> = g.nodes().map(|x| g.degree(x) <= max_degree).collect();
    report.removed_high_degree = keep_degree.iter().filter(|k| !**k).count();

    let mut seed_flags = vec![false; n];
    for &s in seeds {
        if s.index() >= n {
            report.missing_seeds.push(s);
        } else if !keep_degree[s.index()] {
            report.dropped_seeds.push(s);
        } else {
            seed_flags[s.index()] = true;
        }
    }
    report.missing_seeds.sort_unstable();
    report.missing_seeds.dedup();
    report.dropped_seeds.sort_unstable();
    report.dropped_seeds.dedup();

    let (filtered, filtered_old) = g.induced_subgraph(&keep_degree);
    let labels = connected_components(&filtered);
    let mut seeded_component = vec![false; filtered.node_count()];
    for (new, old) in filtered_old.iter().enumerate() {
        if seed_flags[old.index()] {
            seeded_component[labels[new].index()] = true;
        }
    }
    let keep: Vec<bool> = labels.iter().map(|l| seeded_component[l.index()]).collect();
    report.removed_seedless = keep.iter().filter(|k| !**k).count();

    let (graph, sub_old) = filtered.induced_subgraph(&keep);
    let original_ids: Vec<NodeId> = sub_old.iter().map(|&x| filtered_old[x.index()]).collect();
    let seeds = original_ids
        .iter()
        .enumerate()
        .filter(|(_, old)| seed_flags[old.index()])
        .map(|(new, _)| NodeId::from(new))
        .collect();

    Ok(Pruned {
        graph,
        original_ids,
        seeds,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::GraphBuilder;

    fn star(leaves: usize) -> SocialGraph {
        let mut b = GraphBuilder::new();
        for i in 0..leaves {
            b.add_contact("hub", &format!("leaf{i:03}"));
        }
        b.build()
    }

    #[test]
    fn hub_above_threshold_is_removed() {
        let g = star(101);
        let seed = g.node_id("leaf000").unwrap();
        let p = prune_graph(&g, &[seed], 100).unwrap();
        // the hub goes, the seeded leaf becomes an isolated seeded component
        assert_eq!(p.graph.node_count(), 1);
        assert_eq!(p.graph.external_id(NodeId(0)), "leaf000");
        assert_eq!(p.report.removed_high_degree, 1);
        assert_eq!(p.report.removed_seedless, 100);
        assert_eq!(p.seeds, vec![NodeId(0)]);
    }

    #[test]
    fn hub_at_threshold_is_kept() {
        let g = star(100);
        let seed = g.node_id("leaf000").unwrap();
        let p = prune_graph(&g, &[seed], 100).unwrap();
        assert_eq!(p.graph.node_count(), 101);
    }

    #[test]
    fn seedless_component_removed() {
        let mut b = GraphBuilder::new();
        b.add_contact("a", "b").add_contact("c", "d");
        let g = b.build();
        let p = prune_graph(&g, &[g.node_id("a").unwrap()], 100).unwrap();
        assert_eq!(p.graph.external_ids(), &["a", "b"]);
    }

    #[test]
    fn missing_and_dropped_seeds_reported() {
        let g = star(3);
        let hub = g.node_id("hub").unwrap();
        let p = prune_graph(&g, &[hub, NodeId(42)], 2).unwrap();
        assert_eq!(p.report.dropped_seeds, vec![hub]);
        assert_eq!(p.report.missing_seeds, vec![NodeId(42)]);
        assert_eq!(p.graph.node_count(), 0);
    }

    #[test]
    fn zero_threshold_rejected() {
        assert!(prune_graph(&star(2), &[], 0).is_err());
    }
}
