use chrono::{Duration, NaiveDateTime};
use rand::Rng as _;
use rand_distr::{Distribution, LogNormal, Poisson};
use rayon::prelude::*;

use super::{CountModel, EventConfig, SynthConfig};
use crate::error::{Error, Result};
use crate::features::{CdrRecord, Direction, ObservationWindow, SmsRecord};
use crate::graph::{NodeId, SocialGraph};
use crate::labels::{Gender, LabelStore};
use crate::rng;

/// Edges per independent random stream.
const EDGES_PER_SHARD: usize = 4096;
const DAY_START_S: i64 = 7 * 3600;
const NIGHT_START_S: i64 = 19 * 3600;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct EventStreams {
    pub calls: Vec<CdrRecord>,
    pub sms: Vec<SmsRecord>,
}

struct EventSampler<'a> {
    cfg: &'a EventConfig,
    window: ObservationWindow,
    days: i64,
    durations: Option<LogNormal<f64>>,
}

impl EventSampler<'_> {
    fn timestamp(&self, r: &mut rng::Rng) -> NaiveDateTime {
        let midnight = self.window.start.date().and_hms_opt(0, 0, 0).expect("valid time");
        loop {
            let day = r.random_range(0..self.days);
            let s = r.random_range(0..12 * 3600);
            let second = if r.random_bool(self.cfg.daylight_share) {
                DAY_START_S + s
            } else if s < 5 * 3600 {
                NIGHT_START_S + s
            } else {
                s - 5 * 3600
            };
            let t = midnight + Duration::days(day) + Duration::seconds(second);
            if self.window.contains(&t) {
                return t;
            }
        }
    }

    fn duration(&self, r: &mut rng::Rng, caller_male: bool) -> u64 {
        let base = self.durations.as_ref().map_or(self.cfg.duration_log_mean.exp(), |d| d.sample(r));
        let factor = if caller_male { self.cfg.male_outgoing_duration_factor } else { 1.0 };
        (base * factor).round() as u64
    }

    fn poisson(r: &mut rng::Rng, mean: f64) -> u64 {
        Poisson::new(mean).map_or(0, |p| p.sample(r) as u64)
    }
}

/// Calls and messages along graph edges only, timestamps inside `window`.
/// Records are sorted by time, then endpoints.
pub fn generate_events(
    g: &SocialGraph,
    labels: &LabelStore,
    cfg: &SynthConfig,
    window: &ObservationWindow,
) -> Result<EventStreams> {
    cfg.validate()?;
    let ev = &cfg.events;
    let seconds = (window.end - window.start).num_seconds();
    if seconds <= 0 {
        return Err(Error::invalid("event window is empty"));
    }
    let sampler = EventSampler {
        cfg: ev,
        window: *window,
        days: (window.end.date() - window.start.date()).num_days() + 1,
        durations: (ev.duration_log_sd > 0.0)
            .then(|| LogNormal::new(ev.duration_log_mean, ev.duration_log_sd).expect("validated parameters")),
    };
    let male: Vec<bool> = g
        .nodes()
        .map(|x| labels.get(g.external_id(x)).and_then(|u| u.gender) == Some(Gender::Male))
        .collect();
    let activity = |x: NodeId| if male[x.index()] { ev.male_activity } else { ev.female_activity };

    let edges: Vec<(NodeId, NodeId)> = g.edges().collect();
    let seed = rng::derive_seed(cfg.rng_seed, "events");
    let shards: Vec<EventStreams> = edges
        .par_chunks(EDGES_PER_SHARD)
        .enumerate()
        .map(|(shard, chunk)| {
            let mut r = rng::stream(seed, shard as u64);
            let mut out = EventStreams::default();
            for &(x, y) in chunk {
                // (caller, callee) per event
                let mut calls: Vec<(NodeId, NodeId)> = Vec::new();
                let mut texts: Vec<(NodeId, NodeId)> = Vec::new();
                match ev.model {
                    CountModel::Exact => {
                        for _ in 0..ev.calls_per_edge.round() as u64 {
                            calls.push(if r.random_bool(0.5) { (x, y) } else { (y, x) });
                        }
                        for _ in 0..ev.sms_per_edge.round() as u64 {
                            texts.push(if r.random_bool(0.5) { (x, y) } else { (y, x) });
                        }
                    }
                    CountModel::Poisson => {
                        for (a, b) in [(x, y), (y, x)] {
                            let act = activity(a);
                            for _ in 0..EventSampler::poisson(&mut r, ev.calls_per_edge / 2.0 * act) {
                                calls.push((a, b));
                            }
                            for _ in 0..EventSampler::poisson(&mut r, ev.sms_per_edge / 2.0 * act) {
                                texts.push((a, b));
                            }
                        }
                        let any_rate = ev.calls_per_edge + ev.sms_per_edge > 0.0;
                        if calls.is_empty() && texts.is_empty() && any_rate {
                            calls.push(if r.random_bool(0.5) { (x, y) } else { (y, x) });
                        }
                    }
                }
                for (a, b) in calls {
                    out.calls.push(CdrRecord {
                        caller: g.external_id(a).to_owned(),
                        callee: g.external_id(b).to_owned(),
                        timestamp: sampler.timestamp(&mut r),
                        duration_s: sampler.duration(&mut r, male[a.index()]),
                        direction: Direction::Outgoing,
                        tower: format!("t{:03}", r.random_range(0..ev.towers)),
                    });
                }
                for (a, b) in texts {
                    out.sms.push(SmsRecord {
                        sender: g.external_id(a).to_owned(),
                        receiver: g.external_id(b).to_owned(),
                        timestamp: sampler.timestamp(&mut r),
                        direction: Direction::Outgoing,
                    });
                }
            }
            out
        })
        .collect();

    let mut all = EventStreams::default();
    for s in shards {
        all.calls.extend(s.calls);
        all.sms.extend(s.sms);
    }
    all.calls.sort_by(|a, b| {
        (a.timestamp, &a.caller, &a.callee, a.duration_s).cmp(&(b.timestamp, &b.caller, &b.callee, b.duration_s))
    });
    all.sms.sort_by(|a, b| (a.timestamp, &a.sender, &a.receiver).cmp(&(b.timestamp, &b.sender, &b.receiver)));
    Ok(all)
}
