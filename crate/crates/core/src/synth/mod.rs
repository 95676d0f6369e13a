//! Synthetic labeled populations, age-homophilous contact graphs and
//! CDR/SMS event streams.
//!
//! Every random draw comes from ChaCha8 streams keyed by seeds derived from
//! `rng_seed`, one stream per shard, so outputs do not depend on the worker
//! count.
//!
//! ```toml
//! population = 10000
//! gender_split = 0.5683
//! mean_degree = 10.0
//! degree_dispersion = 0.0
//! seed_fraction = 0.1
//! validation_fraction = 0.3
//! rng_seed = 7
//!
//! [age_pyramid]
//! min_age = 18
//! weights = [1.7, 1.7, 3.5]   # one weight per year from min_age
//!
//! [mixing]
//! base = 0.02
//! diagonal_strength = 1.0
//! generational_offset = 25
//! offset_strength = 0.15
//! bandwidth = 2.5
//!
//! [events]
//! model = "poisson"           # or "exact"
//! calls_per_edge = 4.0
//! sms_per_edge = 2.0
//! duration_log_mean = 4.5
//! duration_log_sd = 1.0
//! male_outgoing_duration_factor = 1.0
//! male_activity = 1.0
//! female_activity = 1.0
//! daylight_share = 0.7
//! towers = 50
//!
//! [window]
//! start = "2015-01-01"
//! months = 3
//! ```

mod events;
mod graph;
mod population;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::ObservationWindow;

pub use events::{generate_events, EventStreams};
pub use graph::{generate_graph, mixing_kernel};
pub use population::{generate_population, user_id};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgePyramid {
    pub min_age: u32,
    /// Relative weight of each year starting at `min_age`.
    pub weights: Vec<f64>,
}

impl Default for AgePyramid {
    /// Ages 18–79 with category shares close to 12.1%, 35.45%, 37.45% and
    /// 15% for `<25`, `25-34`, `35-49`, `>=50`.
    fn default() -> Self {
        let mut weights = Vec::new();
        for age in 18..80u32 {
            weights.push(match age {
                ..25 => 12.1 / 7.0,
                25..35 => 35.45 / 10.0,
                35..50 => 37.45 / 15.0,
                _ => 15.0 / 30.0,
            });
        }
        AgePyramid { min_age: 18, weights }
    }
}

impl AgePyramid {
    pub fn max_age(&self) -> u32 {
        self.min_age + self.weights.len().saturating_sub(1) as u32
    }
}

/// `K(d) = base + diagonal·exp(−d²/2σ²) + offset·exp(−(d − g)²/2σ²)` for
/// age difference `d`, generational offset `g` and bandwidth `σ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MixingConfig {
    pub base: f64,
    pub diagonal_strength: f64,
    pub generational_offset: f64,
    pub offset_strength: f64,
    pub bandwidth: f64,
}

impl Default for MixingConfig {
    fn default() -> Self {
        MixingConfig { base: 0.02, diagonal_strength: 1.0, generational_offset: 25.0, offset_strength: 0.15, bandwidth: 2.5 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CountModel {
    /// Per-direction Poisson counts scaled by caller activity; an edge whose
    /// draws are all zero still gets one call so it stays visible.
    Poisson,
    /// Exactly `round(rate)` calls and messages per edge, random caller.
    Exact,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EventConfig {
    pub model: CountModel,
    pub calls_per_edge: f64,
    pub sms_per_edge: f64,
    /// Log-space mean and standard deviation of call durations in seconds.
    pub duration_log_mean: f64,
    pub duration_log_sd: f64,
    pub male_outgoing_duration_factor: f64,
    pub male_activity: f64,
    pub female_activity: f64,
    /// Probability that an event falls between 07:00 and 19:00.
    pub daylight_share: f64,
    pub towers: u32,
}

impl Default for EventConfig {
    fn default() -> Self {
        EventConfig {
            model: CountModel::Poisson,
            calls_per_edge: 4.0,
            sms_per_edge: 2.0,
            duration_log_mean: 4.5,
            duration_log_sd: 1.0,
            male_outgoing_duration_factor: 1.0,
            male_activity: 1.0,
            female_activity: 1.0,
            daylight_share: 0.7,
            towers: 50,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WindowConfig {
    /// First day, `YYYY-MM-DD`.
    pub start: chrono::NaiveDate,
    pub months: u32,
}

impl Default for WindowConfig {
    fn default() -> Self {
        WindowConfig { start: chrono::NaiveDate::from_ymd_opt(2015, 1, 1).expect("valid date"), months: 3 }
    }
}

impl WindowConfig {
    pub fn window(&self) -> Result<ObservationWindow> {
        ObservationWindow::months(self.start, self.months)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub population: usize,
    pub age_pyramid: AgePyramid,
    /// Fraction of users that are male.
    pub gender_split: f64,
    pub mixing: MixingConfig,
    pub mean_degree: f64,
    /// Log-space standard deviation of per-node degree propensities; 0
    /// gives a plain block model.
    pub degree_dispersion: f64,
    pub events: EventConfig,
    pub seed_fraction: f64,
    pub validation_fraction: f64,
    pub window: WindowConfig,
    pub rng_seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            population: 10_000,
            age_pyramid: AgePyramid::default(),
            gender_split: 0.5683,
            mixing: MixingConfig::default(),
            mean_degree: 10.0,
            degree_dispersion: 0.0,
            events: EventConfig::default(),
            seed_fraction: 0.1,
            validation_fraction: 0.3,
            window: WindowConfig::default(),
            rng_seed: 7,
        }
    }
}

fn non_negative(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be finite and non-negative, got {v}")))
    }
}

impl SynthConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: SynthConfig = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let w = &self.age_pyramid.weights;
        if w.is_empty() || w.iter().any(|v| !(v.is_finite() && *v >= 0.0)) || w.iter().sum::<f64>() <= 0.0 {
            return Err(Error::Config("age pyramid weights must be non-negative with a positive sum".into()));
        }
        if !(0.0..=1.0).contains(&self.gender_split) {
            return Err(Error::Config("gender_split must lie in [0, 1]".into()));
        }
        if !(self.mean_degree > 0.0 && self.mean_degree.is_finite()) {
            return Err(Error::Config("mean_degree must be positive".into()));
        }
        non_negative("degree_dispersion", self.degree_dispersion)?;
        let m = &self.mixing;
        for (name, v) in [
            ("mixing.base", m.base),
            ("mixing.diagonal_strength", m.diagonal_strength),
            ("mixing.offset_strength", m.offset_strength),
            ("mixing.generational_offset", m.generational_offset),
        ] {
            non_negative(name, v)?;
        }
        if m.bandwidth.is_nan() || m.bandwidth <= 0.0 {
            return Err(Error::Config("mixing.bandwidth must be positive".into()));
        }
        if m.base + m.diagonal_strength + m.offset_strength <= 0.0 {
            return Err(Error::Config("mixing kernel is identically zero".into()));
        }
        let e = &self.events;
        for (name, v) in [
            ("events.calls_per_edge", e.calls_per_edge),
            ("events.sms_per_edge", e.sms_per_edge),
            ("events.duration_log_sd", e.duration_log_sd),
            ("events.male_outgoing_duration_factor", e.male_outgoing_duration_factor),
            ("events.male_activity", e.male_activity),
            ("events.female_activity", e.female_activity),
        ] {
            non_negative(name, v)?;
        }
        if !e.duration_log_mean.is_finite() {
            return Err(Error::Config("events.duration_log_mean must be finite".into()));
        }
        if !(0.0..=1.0).contains(&e.daylight_share) {
            return Err(Error::Config("events.daylight_share must lie in [0, 1]".into()));
        }
        if e.towers == 0 {
            return Err(Error::Config("events.towers must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.seed_fraction)
            || !(0.0..=1.0).contains(&self.validation_fraction)
            || self.seed_fraction + self.validation_fraction > 1.0
        {
            return Err(Error::Config("seed and validation fractions must lie in [0, 1] and sum to at most 1".into()));
        }
        self.window.window()?;
        Ok(())
    }
}
