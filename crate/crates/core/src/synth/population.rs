use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::Rng as _;

use super::SynthConfig;
use crate::error::{Error, Result};
use crate::labels::{AgeBoundaries, Gender, LabelStore, Role, UserLabel};
use crate::rng;

/// Zero-padded id of user `i`, e.g. `u0000123`; lexicographic order equals
/// numeric order for a fixed population.
pub fn user_id(i: usize, population: usize) -> String {
    let width = population.saturating_sub(1).to_string().len().max(7);
    format!("u{i:0width$}")
}

/// Ages and genders for every user plus a random seed/validation split.
/// Every user carries an age; the role decides whether it may be used.
pub fn generate_population(cfg: &SynthConfig) -> Result<LabelStore> {
    cfg.validate()?;
    let n = cfg.population;
    let ages = WeightedIndex::new(&cfg.age_pyramid.weights)
        .map_err(|e| Error::Config(format!("age pyramid: {e}")))?;
    let mut draw = rng::seeded(rng::derive_seed(cfg.rng_seed, "population"));
    let mut people = Vec::with_capacity(n);
    for _ in 0..n {
        let age = cfg.age_pyramid.min_age + ages.sample(&mut draw) as u32;
        let gender = if draw.random_bool(cfg.gender_split) { Gender::Male } else { Gender::Female };
        people.push((age, gender));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::seeded(rng::derive_seed(cfg.rng_seed, "roles")));
    let n_seed = (cfg.seed_fraction * n as f64).round() as usize;
    let n_val = ((cfg.validation_fraction * n as f64).round() as usize).min(n - n_seed);
    let mut role = vec![Role::Unlabeled; n];
    for &i in &order[..n_seed] {
        role[i] = Role::Seed;
    }
    for &i in &order[n_seed..n_seed + n_val] {
        role[i] = Role::Validation;
    }

    let mut store = LabelStore::new(AgeBoundaries::default());
    for (i, (age, gender)) in people.into_iter().enumerate() {
        store.insert(UserLabel { user_id: user_id(i, n), age: Some(age), gender: Some(gender), role: role[i] })?;
    }
    Ok(store)
}
