//! Independent reference implementations used as test oracles, plus small
//! fixture builders. Nothing here calls into the library's algorithms.
#![allow(dead_code, clippy::needless_range_loop)]

use std::collections::{BTreeSet, VecDeque};

use cdr_demographics::graph::{GraphBuilder, SocialGraph};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Zero-padded id so that lexical order equals numeric order.
pub fn node_name(i: usize) -> String {
    format!("n{i:06}")
}

/// Graph on `n` nodes named by [`node_name`]; node `i` gets id `i`.
pub fn graph_from_pairs(n: usize, pairs: &[(usize, usize)]) -> SocialGraph {
    let mut b = GraphBuilder::new();
    for i in 0..n {
        b.add_node(&node_name(i));
    }
    for &(a, c) in pairs {
        b.add_contact(&node_name(a), &node_name(c));
    }
    b.build()
}

/// Erdős–Rényi style edge list with about `m` distinct undirected edges.
pub fn random_pairs(r: &mut ChaCha8Rng, n: usize, m: usize) -> Vec<(usize, usize)> {
    let mut set = BTreeSet::new();
    if n < 2 {
        return Vec::new();
    }
    let mut tries = 0;
    while set.len() < m && tries < 20 * m + 100 {
        tries += 1;
        let a = r.random_range(0..n);
        let b = r.random_range(0..n);
        if a != b {
            set.insert((a.min(b), a.max(b)));
        }
    }
    set.into_iter().collect()
}

pub fn adjacency(n: usize, pairs: &[(usize, usize)]) -> Vec<BTreeSet<usize>> {
    let mut adj = vec![BTreeSet::new(); n];
    for &(a, b) in pairs {
        if a != b {
            adj[a].insert(b);
            adj[b].insert(a);
        }
    }
    adj
}

/// Union-find with path halving; label is the smallest member.
pub fn union_find_labels(n: usize, pairs: &[(usize, usize)]) -> Vec<usize> {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for &(a, b) in pairs {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            // smaller root wins so the root is the minimum
            let (lo, hi) = (ra.min(rb), ra.max(rb));
            parent[hi] = lo;
        }
    }
    (0..n).map(|x| find(&mut parent, x)).collect()
}

/// Single-source BFS distances, `u32::MAX` when unreachable.
pub fn bfs(adj: &[BTreeSet<usize>], src: usize) -> Vec<u32> {
    let mut d = vec![u32::MAX; adj.len()];
    d[src] = 0;
    let mut q = VecDeque::from([src]);
    while let Some(x) = q.pop_front() {
        for &y in &adj[x] {
            if d[y] == u32::MAX {
                d[y] = d[x] + 1;
                q.push_back(y);
            }
        }
    }
    d
}

/// Nodes kept by: drop degree > max_degree, then keep what a seed reaches.
pub fn brute_prune(n: usize, pairs: &[(usize, usize)], seeds: &[usize], max_degree: usize) -> BTreeSet<usize> {
    let adj = adjacency(n, pairs);
    let alive: Vec<bool> = adj.iter().map(|s| s.len() <= max_degree).collect();
    let filtered: Vec<(usize, usize)> = pairs.iter().copied().filter(|&(a, b)| alive[a] && alive[b]).collect();
    let fadj = adjacency(n, &filtered);
    let mut kept = BTreeSet::new();
    for &s in seeds {
        if !alive[s] {
            continue;
        }
        for (x, d) in bfs(&fadj, s).into_iter().enumerate() {
            if d != u32::MAX {
                kept.insert(x);
            }
        }
    }
    kept
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Returns
/// eigenvalues descending and matching unit eigenvectors (rows).
pub fn jacobi_eigen(a: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut v: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect()).collect();
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| m[i][j] * m[i][j]).sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if m[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[k][p], m[k][q]);
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[p][k], m[q][k]);
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[k][p], v[k][q]);
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[j][j].total_cmp(&m[i][i]));
    let vals = order.iter().map(|&i| m[i][i]).collect();
    let vecs = order.iter().map(|&i| (0..n).map(|k| v[k][i]).collect()).collect();
    (vals, vecs)
}

/// Sample covariance of the given columns (rows × cols input).
pub fn covariance(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = rows.len();
    let p = rows[0].len();
    let mean: Vec<f64> = (0..p).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n as f64).collect();
    let mut c = vec![vec![0.0; p]; p];
    for r in rows {
        for i in 0..p {
            for j in 0..p {
                c[i][j] += (r[i] - mean[i]) * (r[j] - mean[j]);
            }
        }
    }
    for row in &mut c {
        for v in row.iter_mut() {
            *v /= (n - 1) as f64;
        }
    }
    c
}

/// Dense Gaussian elimination with partial pivoting; solves `a·x = b` for
/// each column of `b`.
pub fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let n = a.len();
    let m = b[0].len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                a[r][k] -= f * a[col][k];
            }
            for k in 0..m {
                b[r][k] -= f * b[col][k];
            }
        }
    }
    let mut x = vec![vec![0.0; m]; n];
    for r in (0..n).rev() {
        for k in 0..m {
            let mut s = b[r][k];
            for c in r + 1..n {
                s -= a[r][c] * x[c][k];
            }
            x[r][k] = s / a[r][r];
        }
    }
    x
}

/// Monte-Carlo quantile of the studentized range for `k` groups and `df`
/// error degrees of freedom.
pub fn mc_studentized_quantile(p: f64, k: usize, df: f64, draws: usize, seed: u64) -> f64 {
    use rand_distr::{ChiSquared, Distribution, StandardNormal};
    let mut r = rng(seed);
    let chi = ChiSquared::new(df).unwrap();
    let mut samples: Vec<f64> = (0..draws)
        .map(|_| {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for _ in 0..k {
                let z: f64 = StandardNormal.sample(&mut r);
                lo = lo.min(z);
                hi = hi.max(z);
            }
            let s = (chi.sample(&mut r) / df).sqrt();
            (hi - lo) / s
        })
        .collect();
    samples.sort_by(f64::total_cmp);
    let h = (draws - 1) as f64 * p;
    let i = h.floor() as usize;
    samples[i] + (h - i as f64) * (samples[(i + 1).min(draws - 1)] - samples[i])
}

fn log1pexp(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

/// `Σ|w| + C·Σ log(1 + exp(−y(w·x + b)))` (L1) or with `½‖w‖²` (L2).
pub fn logistic_objective(x: &[Vec<f64>], y: &[f64], c: f64, l1: bool, w: &[f64], b: f64) -> f64 {
    let loss: f64 = x
        .iter()
        .zip(y)
        .map(|(xi, yi)| log1pexp(-yi * (xi.iter().zip(w).map(|(a, c)| a * c).sum::<f64>() + b)))
        .sum();
    let pen = if l1 { w.iter().map(|v| v.abs()).sum::<f64>() } else { 0.5 * w.iter().map(|v| v * v).sum::<f64>() };
    pen + c * loss
}

/// Cyclic coordinate descent with one-dimensional proximal Newton steps and
/// backtracking. Returns `(w, b)`.
pub fn coordinate_descent_logistic(x: &[Vec<f64>], y: &[f64], c: f64, l1: bool) -> (Vec<f64>, f64) {
    let n = x.len();
    let p = x[0].len();
    let mut w = vec![0.0; p];
    let mut b = 0.0;
    let mut margin = vec![0.0; n];
    let obj = |w: &[f64], b: f64| logistic_objective(x, y, c, l1, w, b);
    for _sweep in 0..20_000 {
        let mut max_change: f64 = 0.0;
        for j in 0..=p {
            let (mut g, mut h) = (0.0, 0.0);
            for i in 0..n {
                let xij = if j == p { 1.0 } else { x[i][j] };
                let s = 1.0 / (1.0 + (y[i] * margin[i]).exp());
                g += -c * y[i] * xij * s;
                h += c * xij * xij * s * (1.0 - s);
            }
            let cur = if j == p { b } else { w[j] };
            let target = if j == p {
                cur - g / h.max(1e-12)
            } else if l1 {
                let h = h.max(1e-12);
                let v = cur - g / h;
                v.signum() * (v.abs() - 1.0 / h).max(0.0)
            } else {
                let h = h + 1.0;
                cur - (g + cur) / h
            };
            let mut step = target - cur;
            let before = {
                let mut wt = w.clone();
                let mut bt = b;
                if j == p { bt = cur } else { wt[j] = cur }
                obj(&wt, bt)
            };
            let mut accepted = 0.0;
            for _ in 0..50 {
                let mut wt = w.clone();
                let mut bt = b;
                if j == p { bt = cur + step } else { wt[j] = cur + step }
                if obj(&wt, bt) <= before {
                    accepted = step;
                    break;
                }
                step *= 0.5;
            }
            if accepted != 0.0 {
                if j == p { b += accepted } else { w[j] += accepted }
                for i in 0..n {
                    let xij = if j == p { 1.0 } else { x[i][j] };
                    margin[i] += accepted * xij;
                }
                max_change = max_change.max(accepted.abs());
            }
        }
        if max_change < 1e-11 {
            break;
        }
    }
    (w, b)
}

/// Algorithm 1 traced by repeated selection of the best eligible tuple,
/// without sorting.
pub fn brute_force_pps(prob: &[Vec<f64>], quotas: &[usize]) -> Vec<Option<usize>> {
    let n = prob.len();
    let c = quotas.len();
    let mut assigned = vec![None; n];
    let mut counts = vec![0usize; c];
    loop {
        let mut best: Option<(usize, usize)> = None;
        for i in 0..n {
            if assigned[i].is_some() {
                continue;
            }
            for k in 0..c {
                if counts[k] >= quotas[k] {
                    continue;
                }
                let better = match best {
                    None => true,
                    Some((bi, bk)) => {
                        let (p, bp) = (prob[i][k], prob[bi][bk]);
                        p > bp || (p == bp && (i, k) < (bi, bk))
                    }
                };
                if better {
                    best = Some((i, k));
                }
            }
        }
        match best {
            Some((i, k)) => {
                assigned[i] = Some(k);
                counts[k] += 1;
            }
            None => return assigned,
        }
    }
}

/// Largest-remainder apportionment with exact integer arithmetic:
/// `fractions[k] = numerators[k] / denominator`.
pub fn exact_largest_remainder(total: u64, numerators: &[u64], denominator: u64) -> Vec<u64> {
    let mut quotas: Vec<u64> = numerators.iter().map(|&a| total * a / denominator).collect();
    let rem: Vec<u64> = numerators.iter().map(|&a| total * a % denominator).collect();
    let spare = total - quotas.iter().sum::<u64>();
    let mut order: Vec<usize> = (0..numerators.len()).collect();
    order.sort_by(|&a, &b| rem[b].cmp(&rem[a]).then(a.cmp(&b)));
    for &k in order.iter().take(spare as usize) {
        quotas[k] += 1;
    }
    quotas
}

/// Random row-stochastic matrix with entries quantized to multiples of
/// 1/`grain` so that ties occur.
pub fn random_rows(r: &mut ChaCha8Rng, n: usize, c: usize, grain: u32) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            let raw: Vec<u32> = (0..c).map(|_| r.random_range(0..=grain)).collect();
            let sum: u32 = raw.iter().sum();
            if sum == 0 {
                vec![1.0 / c as f64; c]
            } else {
                raw.iter().map(|&v| f64::from(v) / f64::from(sum)).collect()
            }
        })
        .collect()
}

/// Label store with default boundaries from `(user, age, gender, role)`.
pub fn label_store(
    rows: impl IntoIterator<Item = (String, Option<u32>, Option<cdr_demographics::labels::Gender>, cdr_demographics::labels::Role)>,
) -> cdr_demographics::labels::LabelStore {
    use cdr_demographics::labels::{AgeBoundaries, LabelStore, UserLabel};
    let mut s = LabelStore::new(AgeBoundaries::default());
    for (user_id, age, gender, role) in rows {
        s.insert(UserLabel { user_id, age, gender, role }).unwrap();
    }
    s
}

/// Groups of normal draws with the given means, common standard deviation
/// and sizes.
pub fn normal_groups(r: &mut ChaCha8Rng, means: &[f64], sd: f64, sizes: &[usize]) -> Vec<Vec<f64>> {
    use rand_distr::{Distribution, Normal};
    let d = Normal::new(0.0, sd).unwrap();
    means.iter().zip(sizes).map(|(&m, &n)| (0..n).map(|_| m + d.sample(r)).collect()).collect()
}

/// Random graph pruned to the components of its seeds, with every seed
/// carrying a random category out of `c`. Returns the graph, per-node seed
/// categories and the neighbor lists read back from the graph.
pub fn pruned_instance(
    r: &mut ChaCha8Rng,
    n: usize,
    edges: usize,
    c: usize,
    seed_fraction: f64,
) -> (SocialGraph, Vec<Option<usize>>, Vec<Vec<usize>>) {
    use cdr_demographics::graph::{prune_graph, NodeId};
    let pairs = random_pairs(r, n, edges);
    let g = graph_from_pairs(n, &pairs);
    let seeds: Vec<NodeId> = (0..n).filter(|_| r.random_bool(seed_fraction)).map(NodeId::from).collect();
    let p = prune_graph(&g, &seeds, 100).unwrap();
    let mut cats = vec![None; p.graph.node_count()];
    for s in &p.seeds {
        cats[s.index()] = Some(r.random_range(0..c));
    }
    let adj = p.graph.nodes().map(|x| p.graph.neighbors(x).iter().map(|y| y.index()).collect()).collect();
    (p.graph, cats, adj)
}

/// Initial state: seed rows one-hot, others uniform.
pub fn initial_rows(cats: &[Option<usize>], c: usize) -> Vec<Vec<f64>> {
    cats.iter()
        .map(|s| match s {
            Some(k) => (0..c).map(|j| f64::from(u8::from(j == *k))).collect(),
            None => vec![1.0 / c as f64; c],
        })
        .collect()
}

/// `‖(I − λD⁻¹A)g − (1 − λ)g₀‖_∞` straight from neighbor lists.
pub fn linear_residual(adj: &[Vec<usize>], g0: &[Vec<f64>], g: &[Vec<f64>], lambda: f64) -> f64 {
    let mut worst: f64 = 0.0;
    for x in 0..adj.len() {
        if adj[x].is_empty() {
            continue;
        }
        for k in 0..g0[x].len() {
            let avg: f64 = adj[x].iter().map(|&y| g[y][k]).sum::<f64>() / adj[x].len() as f64;
            worst = worst.max((g[x][k] - lambda * avg - (1.0 - lambda) * g0[x][k]).abs());
        }
    }
    worst
}

/// Fixed point of the diffusion by dense elimination. Isolated rows keep
/// their initial value.
pub fn dense_fixed_point(adj: &[Vec<usize>], g0: &[Vec<f64>], lambda: f64) -> Vec<Vec<f64>> {
    let n = adj.len();
    let mut a = vec![vec![0.0; n]; n];
    for x in 0..n {
        a[x][x] = 1.0;
        let d = adj[x].len() as f64;
        for &y in &adj[x] {
            a[x][y] -= lambda / d;
        }
    }
    let b: Vec<Vec<f64>> = g0
        .iter()
        .zip(adj)
        .map(|(row, nb)| {
            let keep = if nb.is_empty() { 1.0 } else { 1.0 - lambda };
            row.iter().map(|v| keep * v).collect()
        })
        .collect();
    solve_dense(a, b)
}

pub fn rows_of(values: &[f64], c: usize) -> Vec<Vec<f64>> {
    values.chunks(c).map(<[f64]>::to_vec).collect()
}

pub fn max_abs_diff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter().flatten().zip(b.iter().flatten()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
