//! Studentized range distribution by numerical integration.
//!
//! For `k` means and `df` error degrees of freedom,
//!
//! ```text
//! P(Q <= q) = ∫_0^∞ f_S(s) · W(q·s) ds
//! W(w)      = k ∫ φ(z) [Φ(z) − Φ(z − w)]^(k−1) dz
//! ```
//!
//! where `S = sqrt(χ²_df / df)`. Both integrals use composite
//! Gauss–Legendre quadrature; quantiles are found by bisection.

use std::sync::OnceLock;

use statrs::function::erf::erfc;
use statrs::function::gamma::ln_gamma;

const GL_POINTS: usize = 10;
const INNER_LO: f64 = -8.5;
const INNER_HI: f64 = 8.5;
const INNER_PANELS: usize = 34;
const OUTER_PANELS: usize = 60;
/// Above this many degrees of freedom `S` is treated as the constant 1.
const DF_INFINITE: f64 = 25_000.0;
const QUANTILE_TOL: f64 = 1e-7;

fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Gauss–Legendre nodes and weights on [-1, 1].
fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=n {
                let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

fn rule() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(GL_POINTS))
}

/// Composite Gauss–Legendre nodes `(x, w)` over `[a, b]`.
fn composite(a: f64, b: f64, panels: usize) -> Vec<(f64, f64)> {
    let h = (b - a) / panels as f64;
    let mut nodes = Vec::with_capacity(panels * GL_POINTS);
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * h;
        for &(x, w) in rule() {
            nodes.push((mid + 0.5 * h * x, 0.5 * h * w));
        }
    }
    nodes
}

struct InnerNodes {
    z: Vec<f64>,
    /// Quadrature weight times φ(z).
    weight: Vec<f64>,
    cdf: Vec<f64>,
}

fn inner_nodes() -> &'static InnerNodes {
    static NODES: OnceLock<InnerNodes> = OnceLock::new();
    NODES.get_or_init(|| {
        let nodes = composite(INNER_LO, INNER_HI, INNER_PANELS);
        InnerNodes {
            z: nodes.iter().map(|n| n.0).collect(),
            weight: nodes.iter().map(|&(z, w)| w * std_normal_pdf(z)).collect(),
            cdf: nodes.iter().map(|n| std_normal_cdf(n.0)).collect(),
        }
    })
}

/// CDF of the range of `k` independent standard normals.
pub fn normal_range_cdf(w: f64, k: usize) -> f64 {
    if w <= 0.0 {
        return 0.0;
    }
    let nodes = inner_nodes();
    let mut total = 0.0;
    for i in 0..nodes.z.len() {
        let inner = nodes.cdf[i] - std_normal_cdf(nodes.z[i] - w);
        if inner > 0.0 {
            total += nodes.weight[i] * inner.powi(k as i32 - 1);
        }
    }
    (k as f64 * total).clamp(0.0, 1.0)
}

/// `P(Q <= q)` for the studentized range with `k` groups and `df` degrees
/// of freedom.
pub fn ptukey(q: f64, k: usize, df: f64) -> f64 {
    assert!(k >= 2, "studentized range needs k >= 2");
    assert!(df > 0.0, "degrees of freedom must be positive");
    if q <= 0.0 {
        return 0.0;
    }
    if df > DF_INFINITE {
        return normal_range_cdf(q, k);
    }
    let spread = (1.0 / (2.0 * df)).sqrt();
    let lo = (1.0 - 12.0 * spread).max(0.0);
    let hi = 1.0 + 12.0 * spread.max(0.05);
    let half = df / 2.0;
    let log_norm = std::f64::consts::LN_2 + half * half.ln() - ln_gamma(half);
    let mut total = 0.0;
    for (s, w) in composite(lo, hi, OUTER_PANELS) {
        if s <= 0.0 {
            continue;
        }
        let log_density = log_norm + (df - 1.0) * s.ln() - half * s * s;
        let density = log_density.exp();
        if density > 0.0 {
            total += w * density * normal_range_cdf(q * s, k);
        }
    }
    total.clamp(0.0, 1.0)
}

/// Upper quantile: the `q` with `ptukey(q, k, df) = p`.
pub fn qtukey(p: f64, k: usize, df: f64) -> f64 {
    assert!((0.0..1.0).contains(&p), "probability must lie in [0, 1)");
    let mut lo = 0.0;
    let mut hi = 8.0;
    while ptukey(hi, k, df) < p {
        lo = hi;
        hi *= 2.0;
    }
    while hi - lo > QUANTILE_TOL {
        let mid = 0.5 * (lo + hi);
        if ptukey(mid, k, df) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
