use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng as _;
use rand_distr::{LogNormal, Poisson};
use rayon::prelude::*;

use super::{MixingConfig, SynthConfig};
use crate::error::{Error, Result};
use crate::graph::SocialGraph;
use crate::labels::LabelStore;
use crate::rng;

/// Relative edge propensity between two ages `d` years apart.
pub fn mixing_kernel(m: &MixingConfig, d: f64) -> f64 {
    let two_s2 = 2.0 * m.bandwidth * m.bandwidth;
    let d = d.abs();
    m.base
        + m.diagonal_strength * (-(d * d) / two_s2).exp()
        + m.offset_strength * (-(d - m.generational_offset).powi(2) / two_s2).exp()
}

struct Block {
    members: Vec<u32>,
    picker: Option<WeightedIndex<f64>>,
    mass: f64,
}

impl Block {
    fn pick(&self, r: &mut rng::Rng) -> u32 {
        let i = match &self.picker {
            Some(w) => w.sample(r),
            None => r.random_range(0..self.members.len()),
        };
        self.members[i]
    }
}

/// Degree-corrected block model over single-year age blocks.
///
/// Node propensities `θ` are lognormal with mean 1 (all 1 without
/// dispersion). Block pair `(a, b)` receives `Poisson(s·K_ab·Θ_a·Θ_b)`
/// edges (half that on the diagonal) with endpoints drawn proportional to
/// `θ`, where `s` makes the expected mean degree `mean_degree`. Loops and
/// repeats are then collapsed. Every user becomes a node, in id order.
pub fn generate_graph(labels: &LabelStore, cfg: &SynthConfig) -> Result<SocialGraph> {
    cfg.validate()?;
    let mut users: Vec<(&str, u32)> = labels
        .iter()
        .map(|u| {
            u.age
                .map(|a| (u.user_id.as_str(), a))
                .ok_or_else(|| Error::MissingLabel(format!("user {} has no age", u.user_id)))
        })
        .collect::<Result<_>>()?;
    if users.len() < 2 {
        return Err(Error::invalid("graph generation needs at least two users"));
    }
    users.sort_unstable_by(|a, b| a.0.cmp(b.0));
    let n = users.len();

    let theta: Vec<f64> = if cfg.degree_dispersion > 0.0 {
        let s = cfg.degree_dispersion;
        let dist = LogNormal::new(-0.5 * s * s, s).map_err(|e| Error::Config(e.to_string()))?;
        let mut r = rng::seeded(rng::derive_seed(cfg.rng_seed, "theta"));
        (0..n).map(|_| dist.sample(&mut r)).collect()
    } else {
        vec![1.0; n]
    };

    let min_age = users.iter().map(|u| u.1).min().expect("non-empty");
    let max_age = users.iter().map(|u| u.1).max().expect("non-empty");
    let mut members = vec![Vec::new(); (max_age - min_age + 1) as usize];
    for (i, u) in users.iter().enumerate() {
        members[(u.1 - min_age) as usize].push(i as u32);
    }
    let blocks: Vec<Block> = members
        .into_iter()
        .map(|m| {
            let mass: f64 = m.iter().map(|&i| theta[i as usize]).sum();
            let picker = (cfg.degree_dispersion > 0.0 && !m.is_empty())
                .then(|| WeightedIndex::new(m.iter().map(|&i| theta[i as usize])).expect("positive weights"));
            Block { members: m, picker, mass }
        })
        .collect();

    let mut pairs = Vec::new();
    for a in 0..blocks.len() {
        for b in a..blocks.len() {
            if blocks[a].mass > 0.0 && blocks[b].mass > 0.0 {
                let k = mixing_kernel(&cfg.mixing, (b - a) as f64);
                let w = k * blocks[a].mass * blocks[b].mass * if a == b { 0.5 } else { 1.0 };
                if w > 0.0 {
                    pairs.push((a, b, w));
                }
            }
        }
    }
    let total: f64 = pairs.iter().map(|p| p.2).sum();
    let scale = n as f64 * cfg.mean_degree / 2.0 / total;
    let seed = rng::derive_seed(cfg.rng_seed, "graph");
    let stride = blocks.len() as u64;

    let edges: Vec<Vec<(u32, u32)>> = pairs
        .par_iter()
        .map(|&(a, b, w)| {
            let mut r = rng::stream(seed, a as u64 * stride + b as u64);
            let count = match Poisson::new(scale * w) {
                Ok(p) => p.sample(&mut r) as u64,
                Err(_) => 0,
            };
            (0..count).map(|_| (blocks[a].pick(&mut r), blocks[b].pick(&mut r))).collect()
        })
        .collect();
    let flat: Vec<(u32, u32)> = edges.into_iter().flatten().collect();
    let ids = users.into_iter().map(|u| u.0.to_owned()).collect();
    Ok(SocialGraph::from_sorted_ids(ids, &flat))
}
