//! Undirected social graph in compressed sparse row layout.
//!
//! Node ids are dense `0..n` indices interned from external string ids in
//! ascending lexicographic order, so the same set of external ids always maps
//! to the same `NodeId`s no matter what order the records arrived in.

mod io;
mod metrics;
mod prune;

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use io::{read_edge_list, read_snapshot, write_edge_list, write_snapshot, SNAPSHOT_MAGIC, SNAPSHOT_VERSION};
pub use metrics::{compute_topo_metrics, connected_components, TopoMetrics, UNREACHABLE};
pub use prune::{prune_graph, PruneReport, Pruned, DEFAULT_MAX_DEGREE};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
#[repr(transparent)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl From<usize> for NodeId {
    fn from(i: usize) -> Self {
        NodeId(u32::try_from(i).expect("node index exceeds u32"))
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Anything that links two users: a call, an SMS, an edge-list line.
pub trait Contact {
    fn endpoints(&self) -> (&str, &str);
}

impl<A: AsRef<str>, B: AsRef<str>> Contact for (A, B) {
    fn endpoints(&self) -> (&str, &str) {
        (self.0.as_ref(), self.1.as_ref())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SocialGraph {
    offsets: Vec<usize>,
    neighbors: Vec<NodeId>,
    /// Per-entry weights aligned with `neighbors`; `None` means every weight is 1.
    weights: Option<Vec<f64>>,
    ids: Vec<String>,
    lookup: HashMap<String, NodeId>,
}

impl SocialGraph {
    pub fn empty() -> Self {
        SocialGraph {
            offsets: vec![0],
            neighbors: Vec::new(),
            weights: None,
            ids: Vec::new(),
            lookup: HashMap::new(),
        }
    }

    /// Build from external ids and index pairs into `ids`. Self-loops and
    /// duplicate pairs are dropped; both orientations are stored.
    ///
    /// `ids` must be sorted ascending and unique.
    pub(crate) fn from_sorted_ids(ids: Vec<String>, pairs: &[(u32, u32)]) -> Self {
        debug_assert!(ids.windows(2).all(|w| w[0] < w[1]));
        let n = ids.len();
        let mut degree = vec![0usize; n];
        for &(a, b) in pairs {
            if a != b {
                degree[a as usize] += 1;
                degree[b as usize] += 1;
            }
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut fill = offsets[..n].to_vec();
        let mut raw = vec![NodeId(0); offsets[n]];
        for &(a, b) in pairs {
            if a != b {
                raw[fill[a as usize]] = NodeId(b);
                fill[a as usize] += 1;
                raw[fill[b as usize]] = NodeId(a);
                fill[b as usize] += 1;
            }
        }

        let mut compact_offsets = Vec::with_capacity(n + 1);
        compact_offsets.push(0);
        let mut neighbors = Vec::with_capacity(raw.len());
        for x in 0..n {
            let list = &mut raw[offsets[x]..offsets[x + 1]];
            list.sort_unstable();
            let mut last = None;
            for &y in list.iter() {
                if last != Some(y) {
                    neighbors.push(y);
                    last = Some(y);
                }
            }
            compact_offsets.push(neighbors.len());
        }
        neighbors.shrink_to_fit();

        let lookup = ids
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), NodeId::from(i)))
            .collect();
        SocialGraph {
            offsets: compact_offsets,
            neighbors,
            weights: None,
            ids,
            lookup,
        }
    }

    pub(crate) fn from_raw_parts(
        offsets: Vec<usize>,
        neighbors: Vec<NodeId>,
        weights: Option<Vec<f64>>,
        ids: Vec<String>,
    ) -> Result<Self> {
        let n = ids.len();
        if offsets.len() != n + 1 || offsets[0] != 0 || *offsets.last().unwrap() != neighbors.len() {
            return Err(Error::Snapshot("offset array inconsistent with node count".into()));
        }
        if offsets.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Snapshot("offsets not monotone".into()));
        }
        if let Some(w) = &weights {
            if w.len() != neighbors.len() {
                return Err(Error::Snapshot("weight array length mismatch".into()));
            }
        }
        let mut lookup = HashMap::with_capacity(n);
        for (i, s) in ids.iter().enumerate() {
            if lookup.insert(s.clone(), NodeId::from(i)).is_some() {
                return Err(Error::Snapshot(format!("duplicate external id {s:?}")));
            }
        }
        let g = SocialGraph {
            offsets,
            neighbors,
            weights,
            ids,
            lookup,
        };
        g.validate().map_err(Error::Snapshot)?;
        Ok(g)
    }

    /// Check the structural invariants: sorted, duplicate-free, loop-free and
    /// symmetric adjacency.
    pub fn validate(&self) -> std::result::Result<(), String> {
        let n = self.node_count();
        for x in 0..n {
            let list = self.neighbors(NodeId::from(x));
            for w in list.windows(2) {
                if w[0] >= w[1] {
                    return Err(format!("neighbor list of node {x} not strictly ascending"));
                }
            }
            for &y in list {
                if y.index() >= n {
                    return Err(format!("node {x} has out-of-range neighbor {y}"));
                }
                if y.index() == x {
                    return Err(format!("self-loop at node {x}"));
                }
                if self.neighbors(y).binary_search(&NodeId::from(x)).is_err() {
                    return Err(format!("edge {x}-{y} is not symmetric"));
                }
            }
        }
        Ok(())
    }

    pub fn node_count(&self) -> usize {
        self.ids.len()
    }

    /// Number of undirected edges.
    pub fn edge_count(&self) -> usize {
        self.neighbors.len() / 2
    }

    #[inline]
    pub fn degree(&self, x: NodeId) -> usize {
        self.offsets[x.index() + 1] - self.offsets[x.index()]
    }

    #[inline]
    pub fn neighbors(&self, x: NodeId) -> &[NodeId] {
        &self.neighbors[self.offsets[x.index()]..self.offsets[x.index() + 1]]
    }

    /// Weights of `x`'s edges, aligned with [`neighbors`](Self::neighbors).
    /// `None` when the graph carries unit weights.
    pub fn edge_weights(&self, x: NodeId) -> Option<&[f64]> {
        self.weights
            .as_ref()
            .map(|w| &w[self.offsets[x.index()]..self.offsets[x.index() + 1]])
    }

    pub fn has_unit_weights(&self) -> bool {
        self.weights.is_none()
    }

    /// Attach explicit weights computed by `weight(x, y)`; the function must be
    /// symmetric and return finite positive values.
    pub fn with_weights(mut self, weight: impl Fn(NodeId, NodeId) -> f64) -> Result<Self> {
        let mut w = Vec::with_capacity(self.neighbors.len());
        for x in self.nodes() {
            for &y in self.neighbors(x) {
                let v = weight(x, y);
                if !(v.is_finite() && v > 0.0) {
                    return Err(Error::invalid(format!("weight of edge {x}-{y} must be finite and positive, got {v}")));
                }
                if v != weight(y, x) {
                    return Err(Error::invalid(format!("weight of edge {x}-{y} is not symmetric")));
                }
                w.push(v);
            }
        }
        self.weights = Some(w);
        Ok(self)
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.node_count()).map(NodeId::from)
    }

    /// Each undirected edge once, as `(x, y)` with `x < y`, in ascending order.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.nodes().flat_map(move |x| {
            self.neighbors(x)
                .iter()
                .copied()
                .filter(move |&y| y > x)
                .map(move |y| (x, y))
        })
    }

    pub fn external_id(&self, x: NodeId) -> &str {
        &self.ids[x.index()]
    }

    pub fn external_ids(&self) -> &[String] {
        &self.ids
    }

    pub fn node_id(&self, external: &str) -> Option<NodeId> {
        self.lookup.get(external).copied()
    }

    pub(crate) fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub(crate) fn raw_neighbors(&self) -> &[NodeId] {
        &self.neighbors
    }

    pub(crate) fn raw_weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    /// Subgraph induced by the nodes with `keep[x] == true`. Ids are
    /// re-compacted preserving order; the second value maps each new id to
    /// its id in `self`.
    pub fn induced_subgraph(&self, keep: &[bool]) -> (SocialGraph, Vec<NodeId>) {
        assert_eq!(keep.len(), self.node_count());
        let mut new_id = vec![u32::MAX; self.node_count()];
        let mut old_ids = Vec::new();
        for x in self.nodes() {
            if keep[x.index()] {
                new_id[x.index()] = old_ids.len() as u32;
                old_ids.push(x);
            }
        }
        let mut offsets = Vec::with_capacity(old_ids.len() + 1);
        offsets.push(0);
        let mut neighbors = Vec::new();
        let mut weights = self.weights.as_ref().map(|_| Vec::new());
        for &x in &old_ids {
            let list = self.neighbors(x);
            let wl = self.edge_weights(x);
            for (k, &y) in list.iter().enumerate() {
                if keep[y.index()] {
                    neighbors.push(NodeId(new_id[y.index()]));
                    if let (Some(out), Some(wl)) = (weights.as_mut(), wl) {
                        out.push(wl[k]);
                    }
                }
            }
            offsets.push(neighbors.len());
        }
        let ids: Vec<String> = old_ids.iter().map(|&x| self.ids[x.index()].clone()).collect();
        let lookup = ids
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), NodeId::from(i)))
            .collect();
        (
            SocialGraph {
                offsets,
                neighbors,
                weights,
                ids,
                lookup,
            },
            old_ids,
        )
    }
}

/// Accumulates contacts and interns external ids.
#[derive(Debug, Default)]
pub struct GraphBuilder {
    index: HashMap<String, u32>,
    names: Vec<String>,
    pairs: Vec<(u32, u32)>,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    fn intern(&mut self, id: &str) -> u32 {
        if let Some(&i) = self.index.get(id) {
            return i;
        }
        let i = u32::try_from(self.names.len()).expect("more than u32::MAX nodes");
        self.index.insert(id.to_owned(), i);
        self.names.push(id.to_owned());
        i
    }

    pub fn add_node(&mut self, id: &str) -> &mut Self {
        self.intern(id);
        self
    }

    /// Record a communication between `a` and `b` in either direction. A
    /// self-communication registers the node but adds no edge.
    pub fn add_contact(&mut self, a: &str, b: &str) -> &mut Self {
        let ia = self.intern(a);
        let ib = self.intern(b);
        if ia != ib {
            self.pairs.push((ia, ib));
        }
        self
    }

    pub fn build(self) -> SocialGraph {
        let mut order: Vec<u32> = (0..self.names.len() as u32).collect();
        order.sort_unstable_by(|&a, &b| self.names[a as usize].cmp(&self.names[b as usize]));
        let mut rank = vec![0u32; order.len()];
        for (r, &i) in order.iter().enumerate() {
            rank[i as usize] = r as u32;
        }
        let mut names = self.names;
        let ids: Vec<String> = order.iter().map(|&i| std::mem::take(&mut names[i as usize])).collect();
        let pairs: Vec<(u32, u32)> = self
            .pairs
            .iter()
            .map(|&(a, b)| (rank[a as usize], rank[b as usize]))
            .collect();
        SocialGraph::from_sorted_ids(ids, &pairs)
    }
}

/// Build the symmetrized contact graph: an edge exists iff at least one
/// contact happened in either direction.
pub fn build_graph<'a, C, I>(contacts: I) -> SocialGraph
where
    C: Contact + 'a,
    I: IntoIterator<Item = &'a C>,
{
    let mut b = GraphBuilder::new();
    for c in contacts {
        let (x, y) = c.endpoints();
        b.add_contact(x, y);
    }
    b.build()
}
