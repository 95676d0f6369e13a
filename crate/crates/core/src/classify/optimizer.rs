//! Minimizer for `f(θ) + Σ_{j ∈ L1} |θ_j|` with smooth `f`.
//!
//! Steps follow orthant-wise limited-memory quasi-Newton directions
//! (OWL-QN; plain L-BFGS when no coordinate is penalized). When the line
//! search cannot make progress a proximal gradient step with backtracking
//! is tried instead. Every accepted step leaves the objective no larger.
//! Iteration also stops once the objective stalls at rounding level.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

/// Curvature pairs kept by the quasi-Newton model.
const HISTORY: usize = 10;
/// Sufficient-decrease constant of the line search.
const ARMIJO: f64 = 1e-4;
const MAX_HALVINGS: usize = 40;
/// Consecutive steps without a relative decrease above rounding after
/// which the iterate is taken as final.
const STALL_LIMIT: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerOptions {
    pub max_iterations: usize,
    /// Bound on `‖θ − prox(θ − ∇f(θ))‖_∞`, the gradient norm when no
    /// coordinate is L1-penalized.
    pub tolerance: f64,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        OptimizerOptions { max_iterations: 10_000, tolerance: 1e-6 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub iterations: usize,
    pub converged: bool,
    pub gradient_mapping_norm: f64,
    /// Full objective at the start and after every accepted step.
    pub objective_trace: Vec<f64>,
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

fn l1_norm(theta: &[f64], l1: &[bool]) -> f64 {
    theta.iter().zip(l1).filter(|p| *p.1).map(|p| p.0.abs()).sum()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn mapping_norm(theta: &[f64], grad: &[f64], l1: &[bool]) -> f64 {
    let mut norm: f64 = 0.0;
    for j in 0..theta.len() {
        let v = theta[j] - grad[j];
        let p = if l1[j] { soft_threshold(v, 1.0) } else { v };
        norm = norm.max((theta[j] - p).abs());
    }
    norm
}

/// Minimum-norm subgradient of the full objective.
fn pseudo_gradient(theta: &[f64], grad: &[f64], l1: &[bool], out: &mut [f64]) {
    for j in 0..theta.len() {
        out[j] = if !l1[j] {
            grad[j]
        } else if theta[j] > 0.0 {
            grad[j] + 1.0
        } else if theta[j] < 0.0 {
            grad[j] - 1.0
        } else if grad[j] + 1.0 < 0.0 {
            grad[j] + 1.0
        } else if grad[j] - 1.0 > 0.0 {
            grad[j] - 1.0
        } else {
            0.0
        };
    }
}

struct Pair {
    s: Vec<f64>,
    y: Vec<f64>,
    rho: f64,
}

/// `−H·v` for the L-BFGS inverse-Hessian model.
fn two_loop(v: &[f64], history: &VecDeque<Pair>, out: &mut [f64]) {
    out.copy_from_slice(v);
    let mut alphas = vec![0.0; history.len()];
    for (i, p) in history.iter().enumerate().rev() {
        alphas[i] = p.rho * dot(&p.s, out);
        for (o, y) in out.iter_mut().zip(&p.y) {
            *o -= alphas[i] * y;
        }
    }
    if let Some(last) = history.back() {
        let gamma = dot(&last.s, &last.y) / dot(&last.y, &last.y);
        out.iter_mut().for_each(|o| *o *= gamma);
    }
    for (i, p) in history.iter().enumerate() {
        let beta = p.rho * dot(&p.y, out);
        for (o, s) in out.iter_mut().zip(&p.s) {
            *o += (alphas[i] - beta) * s;
        }
    }
    out.iter_mut().for_each(|o| *o = -*o);
}

struct Point {
    theta: Vec<f64>,
    grad: Vec<f64>,
    f: f64,
    objective: f64,
    norm: f64,
}

/// Minimizes from `theta` in place. `smooth` returns `f(θ)` and writes
/// `∇f(θ)` into its second argument.
pub fn minimize<F>(theta: &mut [f64], l1: &[bool], opts: &OptimizerOptions, mut smooth: F) -> FitReport
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let d = theta.len();
    assert_eq!(l1.len(), d);
    let mut grad = vec![0.0; d];
    let f = smooth(theta, &mut grad);
    let mut cur = Point {
        objective: f + l1_norm(theta, l1),
        norm: mapping_norm(theta, &grad, l1),
        theta: theta.to_vec(),
        grad,
        f,
    };
    let mut trace = vec![cur.objective];
    let mut history: VecDeque<Pair> = VecDeque::with_capacity(HISTORY);
    let mut pg = vec![0.0; d];
    let mut dir = vec![0.0; d];
    let mut iterations = 0;
    let mut prox_step = 1.0;
    let mut stalled = 0;

    while cur.norm >= opts.tolerance && iterations < opts.max_iterations {
        pseudo_gradient(&cur.theta, &cur.grad, l1, &mut pg);
        let next = quasi_newton_step(&cur, &pg, l1, &history, &mut dir, &mut smooth)
            .or_else(|| proximal_step(&cur, l1, &mut prox_step, &mut smooth));
        let Some(next) = next else { break };
        debug_assert!(next.objective <= cur.objective);

        let s: Vec<f64> = next.theta.iter().zip(&cur.theta).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = next.grad.iter().zip(&cur.grad).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() && sy > 0.0 {
            if history.len() == HISTORY {
                history.pop_front();
            }
            history.push_back(Pair { s, y, rho: 1.0 / sy });
        }
        if cur.objective - next.objective <= 1e-14 * cur.objective.abs().max(1.0) {
            stalled += 1;
        } else {
            stalled = 0;
        }
        cur = next;
        trace.push(cur.objective);
        iterations += 1;
        if stalled >= STALL_LIMIT {
            break;
        }
    }

    theta.copy_from_slice(&cur.theta);
    FitReport {
        iterations,
        converged: cur.norm < opts.tolerance,
        gradient_mapping_norm: cur.norm,
        objective_trace: trace,
    }
}

/// Accepts a trial point on sufficient decrease, or on no increase with a
/// smaller gradient mapping once decreases fall below rounding.
fn accept(cur: &Point, trial: &Point, predicted: f64) -> bool {
    trial.objective <= cur.objective + ARMIJO * predicted
        || (trial.objective <= cur.objective && trial.norm < cur.norm)
}

fn evaluate<F>(theta: Vec<f64>, l1: &[bool], smooth: &mut F) -> Point
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let mut grad = vec![0.0; theta.len()];
    let f = smooth(&theta, &mut grad);
    Point { objective: f + l1_norm(&theta, l1), norm: mapping_norm(&theta, &grad, l1), theta, grad, f }
}

fn quasi_newton_step<F>(
    cur: &Point,
    pg: &[f64],
    l1: &[bool],
    history: &VecDeque<Pair>,
    dir: &mut [f64],
    smooth: &mut F,
) -> Option<Point>
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let d = cur.theta.len();
    two_loop(pg, history, dir);
    // stay in the orthant picked by the pseudo-gradient
    for j in 0..d {
        if l1[j] && dir[j] * pg[j] >= 0.0 {
            dir[j] = 0.0;
        }
    }
    if dot(dir, pg) >= 0.0 {
        return None;
    }
    let orthant: Vec<f64> = (0..d)
        .map(|j| if cur.theta[j] != 0.0 { cur.theta[j].signum() } else { -pg[j].signum() })
        .collect();
    let mut alpha = if history.is_empty() {
        1.0 / dot(pg, pg).sqrt().max(1.0)
    } else {
        1.0
    };
    for _ in 0..MAX_HALVINGS {
        let mut trial = vec![0.0; d];
        for j in 0..d {
            let v = cur.theta[j] + alpha * dir[j];
            trial[j] = if l1[j] && v * orthant[j] <= 0.0 { 0.0 } else { v };
        }
        let predicted: f64 = (0..d).map(|j| pg[j] * (trial[j] - cur.theta[j])).sum();
        let point = evaluate(trial, l1, smooth);
        if accept(cur, &point, predicted) {
            return Some(point);
        }
        alpha *= 0.5;
    }
    None
}

/// Proximal gradient step; backtracks until the quadratic upper bound
/// holds and the objective does not increase.
fn proximal_step<F>(cur: &Point, l1: &[bool], step: &mut f64, smooth: &mut F) -> Option<Point>
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let d = cur.theta.len();
    let mut t = *step;
    while t >= 1e-20 {
        let trial: Vec<f64> = (0..d)
            .map(|j| {
                let v = cur.theta[j] - t * cur.grad[j];
                if l1[j] {
                    soft_threshold(v, t)
                } else {
                    v
                }
            })
            .collect();
        let mut bound = cur.f;
        let mut sq = 0.0;
        for j in 0..d {
            let s = trial[j] - cur.theta[j];
            bound += cur.grad[j] * s;
            sq += s * s;
        }
        if sq == 0.0 {
            return None;
        }
        bound += sq / (2.0 * t);
        let point = evaluate(trial, l1, smooth);
        if point.f <= bound && point.objective <= cur.objective {
            *step = t * 2.0;
            return Some(point);
        }
        t *= 0.5;
    }
    None
}
