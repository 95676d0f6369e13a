use rayon::prelude::*;

use crate::graph::SocialGraph;

const MIN_NODES_PER_TASK: usize = 512;

/// One Jacobi sweep over `width`-wide rows:
///
/// ```text
/// next[x] = (1 − λ)·init[x] + λ · Σ_{y∼x} w_xy·prev[y] / Σ_{y∼x} w_xy
/// ```
///
/// Neighbor sums run in ascending node order, so the result does not depend
/// on the worker count. Degree-zero nodes copy their `init` row.
pub fn propagate(g: &SocialGraph, init: &[f64], prev: &[f64], next: &mut [f64], width: usize, lambda: f64) {
    let n = g.node_count();
    assert!(width > 0);
    assert_eq!(init.len(), n * width);
    assert_eq!(prev.len(), n * width);
    assert_eq!(next.len(), n * width);
    let offsets = g.offsets();
    let nbrs = g.raw_neighbors();
    let weights = g.raw_weights();
    let memory = 1.0 - lambda;

    next.par_chunks_mut(width).enumerate().with_min_len(MIN_NODES_PER_TASK).for_each(|(x, out)| {
        let own = &init[x * width..(x + 1) * width];
        let (lo, hi) = (offsets[x], offsets[x + 1]);
        if lo == hi {
            out.copy_from_slice(own);
            return;
        }
        out.fill(0.0);
        let total = match weights {
            None => {
                for y in &nbrs[lo..hi] {
                    let row = &prev[y.index() * width..(y.index() + 1) * width];
                    for (o, v) in out.iter_mut().zip(row) {
                        *o += v;
                    }
                }
                (hi - lo) as f64
            }
            Some(w) => {
                let mut total = 0.0;
                for (y, &wy) in nbrs[lo..hi].iter().zip(&w[lo..hi]) {
                    let row = &prev[y.index() * width..(y.index() + 1) * width];
                    for (o, v) in out.iter_mut().zip(row) {
                        *o += wy * v;
                    }
                    total += wy;
                }
                total
            }
        };
        for (o, g0) in out.iter_mut().zip(own) {
            *o = memory * g0 + lambda * (*o / total);
        }
    });
}

/// `‖(I − λD⁻¹A)g − (1 − λ)g₀‖_∞` over nodes with at least one neighbor.
pub fn residual_inf(g: &SocialGraph, init: &[f64], state: &[f64], width: usize, lambda: f64) -> f64 {
    let mut next = vec![0.0; state.len()];
    propagate(g, init, state, &mut next, width, lambda);
    // next − g = (1−λ)g₀ + λD⁻¹Ag − g, the negated residual
    let mut worst: f64 = 0.0;
    for x in g.nodes() {
        if g.degree(x) == 0 {
            continue;
        }
        for c in 0..width {
            let i = x.index() * width + c;
            worst = worst.max((next[i] - state[i]).abs());
        }
    }
    worst
}
