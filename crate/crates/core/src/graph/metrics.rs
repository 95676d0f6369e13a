use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::{NodeId, SocialGraph};
use crate::error::{Error, Result};

/// Distance-to-seed sentinel for nodes no seed can reach.
pub const UNREACHABLE: u32 = u32::MAX;

/// Per-node topology relative to a seed set.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopoMetrics {
    pub degree: Vec<u32>,
    /// Seeds in the immediate neighborhood.
    pub sin: Vec<u32>,
    /// Hop distance to the nearest seed, [`UNREACHABLE`] if none.
    pub dts: Vec<u32>,
}

/// Component label per node; each component is labeled by its smallest id.
pub fn connected_components(g: &SocialGraph) -> Vec<NodeId> {
    let n = g.node_count();
    let mut label = vec![NodeId(u32::MAX); n];
    let mut queue = VecDeque::new();
    for root in g.nodes() {
        if label[root.index()].0 != u32::MAX {
            continue;
        }
        label[root.index()] = root;
        queue.push_back(root);
        while let Some(x) = queue.pop_front() {
            for &y in g.neighbors(x) {
                if label[y.index()].0 == u32::MAX {
                    label[y.index()] = root;
                    queue.push_back(y);
                }
            }
        }
    }
    label
}

pub fn compute_topo_metrics(g: &SocialGraph, seeds: &[NodeId]) -> Result<TopoMetrics> {
    let n = g.node_count();
    let mut is_seed = vec![false; n];
    for &s in seeds {
        if s.index() >= n {
            return Err(Error::invalid(format!("seed {s} is not a node of the graph")));
        }
        is_seed[s.index()] = true;
    }

    let degree: Vec<u32> = g.nodes().map(|x| g.degree(x) as u32).collect();
    let sin: Vec<u32> = g
        .nodes()
        .map(|x| g.neighbors(x).iter().filter(|y| is_seed[y.index()]).count() as u32)
        .collect();

    // multi-source BFS
    let mut dts = vec![UNREACHABLE; n];
    let mut queue = VecDeque::new();
    for x in g.nodes() {
        if is_seed[x.index()] {
            dts[x.index()] = 0;
            queue.push_back(x);
        }
    }
    while let Some(x) = queue.pop_front() {
        let next = dts[x.index()] + 1;
        for &y in g.neighbors(x) {
            if dts[y.index()] == UNREACHABLE {
                dts[y.index()] = next;
                queue.push_back(y);
            }
        }
    }

    Ok(TopoMetrics { degree, sin, dts })
}
