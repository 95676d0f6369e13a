use std::collections::{HashMap, HashSet};

use chrono::{Datelike, Months, NaiveDate, NaiveDateTime, Timelike, Weekday};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::records::{CdrRecord, SmsRecord};
use super::{ColumnKind, FeatureMatrix};
use crate::error::{Error, Result};

pub const RAW_COLUMN_COUNT: usize = 45;

const DIRS: [&str; 3] = ["in", "out", "all"];
const PARTS: [&str; 4] = ["weekdaylight", "weeknight", "weekend", "total"];
const SHARD: usize = 1 << 14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DayPart {
    WeekdayLight,
    WeekNight,
    Weekend,
}

/// Weekday daylight is `[daylight_start_hour, daylight_end_hour)` Monday
/// through Friday; the rest of a weekday is night; Saturday and Sunday are
/// weekend.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DaySplit {
    pub daylight_start_hour: u32,
    pub daylight_end_hour: u32,
}

impl Default for DaySplit {
    fn default() -> Self {
        DaySplit {
            daylight_start_hour: 7,
            daylight_end_hour: 19,
        }
    }
}

impl DaySplit {
    pub fn classify(&self, t: &NaiveDateTime) -> DayPart {
        match t.weekday() {
            Weekday::Sat | Weekday::Sun => DayPart::Weekend,
            _ => {
                let h = t.hour();
                if h >= self.daylight_start_hour && h < self.daylight_end_hour {
                    DayPart::WeekdayLight
                } else {
                    DayPart::WeekNight
                }
            }
        }
    }
}

/// Half-open interval `[start, end)` in local time.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObservationWindow {
    pub start: NaiveDateTime,
    pub end: NaiveDateTime,
}

impl ObservationWindow {
    pub fn new(start: NaiveDateTime, end: NaiveDateTime) -> Result<Self> {
        if end <= start {
            return Err(Error::invalid("observation window must be non-empty"));
        }
        Ok(ObservationWindow { start, end })
    }

    /// `months` calendar months starting at midnight of `first_day`.
    pub fn months(first_day: NaiveDate, months: u32) -> Result<Self> {
        let start = first_day.and_hms_opt(0, 0, 0).unwrap();
        let end = start
            .checked_add_months(Months::new(months))
            .ok_or_else(|| Error::invalid("window end out of range"))?;
        ObservationWindow::new(start, end)
    }

    pub fn contains(&self, t: &NaiveDateTime) -> bool {
        *t >= self.start && *t < self.end
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractOptions {
    pub window: ObservationWindow,
    pub day_split: DaySplit,
}

#[derive(Clone, Debug)]
pub struct Extraction {
    pub matrix: FeatureMatrix,
    /// Records dropped for falling outside the window.
    pub skipped_outside_window: u64,
}

/// The 45 raw column names in their fixed order.
pub fn raw_column_names() -> Vec<String> {
    let mut names = Vec::with_capacity(RAW_COLUMN_COUNT);
    for metric in ["count", "time", "sms"] {
        for dir in DIRS {
            for part in PARTS {
                names.push(format!("{dir}-{metric}-{part}"));
            }
        }
    }
    for medium in ["call", "sms"] {
        for dir in DIRS {
            names.push(format!("{medium}-days-{dir}"));
        }
    }
    for dir in ["in", "out", "total"] {
        names.push(format!("degree-{dir}"));
    }
    names
}

/// Counters for one user. Index 0 is incoming, 1 outgoing.
#[derive(Clone, Debug, Default)]
struct UserAcc {
    calls: [[u64; 3]; 2],
    calls_total: [u64; 2],
    secs: [[u64; 3]; 2],
    secs_total: [u64; 2],
    sms: [[u64; 3]; 2],
    sms_total: [u64; 2],
    /// Activity days as days since the common era: call in/out/any, sms in/out/any.
    days: [HashSet<i32>; 6],
    contacts_in: HashSet<String>,
    contacts_out: HashSet<String>,
}

impl UserAcc {
    fn merge(&mut self, other: UserAcc) {
        for d in 0..2 {
            for p in 0..3 {
                self.calls[d][p] += other.calls[d][p];
                self.secs[d][p] += other.secs[d][p];
                self.sms[d][p] += other.sms[d][p];
            }
            self.calls_total[d] += other.calls_total[d];
            self.secs_total[d] += other.secs_total[d];
            self.sms_total[d] += other.sms_total[d];
        }
        for (mine, theirs) in self.days.iter_mut().zip(other.days) {
            mine.extend(theirs);
        }
        self.contacts_in.extend(other.contacts_in);
        self.contacts_out.extend(other.contacts_out);
    }

    fn row(&self) -> Vec<f64> {
        let mut row = Vec::with_capacity(RAW_COLUMN_COUNT);
        for (parts, totals) in [
            (&self.calls, &self.calls_total),
            (&self.secs, &self.secs_total),
            (&self.sms, &self.sms_total),
        ] {
            for d in 0..2 {
                debug_assert_eq!(parts[d].iter().sum::<u64>(), totals[d]);
                row.extend(parts[d].iter().map(|&v| v as f64));
                row.push(totals[d] as f64);
            }
            for p in 0..3 {
                row.push((parts[0][p] + parts[1][p]) as f64);
            }
            row.push((totals[0] + totals[1]) as f64);
        }
        row.extend(self.days.iter().map(|s| s.len() as f64));
        row.push(self.contacts_in.len() as f64);
        row.push(self.contacts_out.len() as f64);
        let total = self.contacts_in.union(&self.contacts_out).count();
        row.push(total as f64);
        row
    }
}

fn part_index(p: DayPart) -> usize {
    match p {
        DayPart::WeekdayLight => 0,
        DayPart::WeekNight => 1,
        DayPart::Weekend => 2,
    }
}

type Shard = (HashMap<String, UserAcc>, u64);

fn merge_shards(mut a: Shard, b: Shard) -> Shard {
    for (user, acc) in b.0 {
        a.0.entry(user).or_default().merge(acc);
    }
    a.1 += b.1;
    a
}

#[derive(Clone, Copy)]
enum Medium {
    Call { secs: u64 },
    Sms,
}

fn record_event(
    shard: &mut Shard,
    from: &str,
    to: &str,
    t: &NaiveDateTime,
    medium: Medium,
    opts: &ExtractOptions,
) {
    if !opts.window.contains(t) {
        shard.1 += 1;
        return;
    }
    if from == to {
        // self-communication: the user gets a row, nothing is counted
        shard.0.entry(from.to_owned()).or_default();
        return;
    }
    let p = part_index(opts.day_split.classify(t));
    let day = t.date().num_days_from_ce();
    for (user, other, dir) in [(from, to, 1usize), (to, from, 0usize)] {
        let acc = shard.0.entry(user.to_owned()).or_default();
        let day_base = match medium {
            Medium::Call { secs } => {
                acc.calls[dir][p] += 1;
                acc.calls_total[dir] += 1;
                acc.secs[dir][p] += secs;
                acc.secs_total[dir] += secs;
                0
            }
            Medium::Sms => {
                acc.sms[dir][p] += 1;
                acc.sms_total[dir] += 1;
                3
            }
        };
        acc.days[day_base + dir].insert(day);
        acc.days[day_base + 2].insert(day);
        if dir == 1 {
            acc.contacts_out.insert(other.to_owned());
        } else {
            acc.contacts_in.insert(other.to_owned());
        }
    }
}

/// Compute the 45 raw characterization variables for every user that
/// appears in any record. The caller of a call (sender of an SMS) is
/// credited with outgoing activity, the other party with incoming activity.
pub fn extract_features(cdr: &[CdrRecord], sms: &[SmsRecord], opts: &ExtractOptions) -> Extraction {
    let calls = cdr
        .par_chunks(SHARD)
        .map(|chunk| {
            let mut shard: Shard = Default::default();
            for r in chunk {
                record_event(&mut shard, &r.caller, &r.callee, &r.timestamp, Medium::Call { secs: r.duration_s }, opts);
            }
            shard
        })
        .reduce(Shard::default, merge_shards);
    let texts = sms
        .par_chunks(SHARD)
        .map(|chunk| {
            let mut shard: Shard = Default::default();
            for r in chunk {
                record_event(&mut shard, &r.sender, &r.receiver, &r.timestamp, Medium::Sms, opts);
            }
            shard
        })
        .reduce(Shard::default, merge_shards);
    let (users, skipped) = merge_shards(calls, texts);

    // users appearing only in out-of-window records still get a zero row
    let mut all_ids: HashSet<&str> = users.keys().map(String::as_str).collect();
    for r in cdr {
        all_ids.insert(&r.caller);
        all_ids.insert(&r.callee);
    }
    for r in sms {
        all_ids.insert(&r.sender);
        all_ids.insert(&r.receiver);
    }
    let mut ids: Vec<String> = all_ids.into_iter().map(str::to_owned).collect();
    ids.sort_unstable();

    let empty = UserAcc::default();
    let mut values = Vec::with_capacity(ids.len() * RAW_COLUMN_COUNT);
    for id in &ids {
        values.extend(users.get(id).unwrap_or(&empty).row());
    }
    let names = raw_column_names();
    let kinds = vec![ColumnKind::Raw; names.len()];
    let matrix = FeatureMatrix::new(ids, names, kinds, values).expect("extraction produces a consistent matrix");
    Extraction {
        matrix,
        skipped_outside_window: skipped,
    }
}
