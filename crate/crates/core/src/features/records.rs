//! Call and SMS records and their CSV formats.
//!
//! CDR CSV header: `caller,callee,timestamp_iso8601,duration_s,direction,tower`
//! SMS CSV header: `sender,receiver,timestamp_iso8601,direction`
//!
//! Timestamps are ISO-8601. Values carrying an offset (`Z`, `+02:00`) are
//! converted to the configured local offset; values without one are taken
//! as local time already. `direction` is `incoming` or `outgoing`, relative
//! to the operator's client.

use std::io::{Read, Write};
use std::str::FromStr;

use chrono::{DateTime, FixedOffset, NaiveDateTime};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Contact;

pub const TIMESTAMP_FORMAT: &str = "%Y-%m-%dT%H:%M:%S";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Incoming,
    Outgoing,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Incoming => "incoming",
            Direction::Outgoing => "outgoing",
        }
    }
}

impl FromStr for Direction {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "incoming" => Ok(Direction::Incoming),
            "outgoing" => Ok(Direction::Outgoing),
            other => Err(format!("unknown direction {other:?}")),
        }
    }
}

/// One voice call.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CdrRecord {
    pub caller: String,
    pub callee: String,
    /// Local time.
    pub timestamp: NaiveDateTime,
    pub duration_s: u64,
    pub direction: Direction,
    /// Opaque tower token; carried through but not used by any feature.
    pub tower: String,
}

/// One text message.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SmsRecord {
    pub sender: String,
    pub receiver: String,
    pub timestamp: NaiveDateTime,
    pub direction: Direction,
}

impl Contact for CdrRecord {
    fn endpoints(&self) -> (&str, &str) {
        (&self.caller, &self.callee)
    }
}

impl Contact for SmsRecord {
    fn endpoints(&self) -> (&str, &str) {
        (&self.sender, &self.receiver)
    }
}

/// Parse an ISO-8601 timestamp into local time at `local_offset`.
pub fn parse_timestamp(s: &str, local_offset: FixedOffset) -> Option<NaiveDateTime> {
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Some(dt.with_timezone(&local_offset).naive_local());
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f", "%Y-%m-%dT%H:%M"] {
        if let Ok(t) = NaiveDateTime::parse_from_str(s, fmt) {
            return Some(t);
        }
    }
    None
}

pub fn format_timestamp(t: &NaiveDateTime) -> String {
    t.format(TIMESTAMP_FORMAT).to_string()
}

fn field<'r>(rec: &'r csv::StringRecord, idx: usize, name: &str, line: u64) -> Result<&'r str> {
    let v = rec
        .get(idx)
        .ok_or_else(|| Error::row(line, format!("missing field `{name}`")))?;
    if v.is_empty() {
        return Err(Error::row(line, format!("empty field `{name}`")));
    }
    Ok(v)
}

fn line_of(rec: &csv::StringRecord) -> u64 {
    rec.position().map(|p| p.line()).unwrap_or(0)
}

fn csv_reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .trim(csv::Trim::All)
        .from_reader(r)
}

fn map_csv_error(e: csv::Error) -> Error {
    match e.position() {
        Some(p) => Error::row(p.line(), e.to_string()),
        None => Error::Csv(e),
    }
}

pub fn read_cdr_csv<R: Read>(r: R, local_offset: FixedOffset) -> Result<Vec<CdrRecord>> {
    let mut rdr = csv_reader(r);
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(map_csv_error)?;
        let line = line_of(&rec);
        if rec.len() != 6 {
            return Err(Error::row(line, format!("expected 6 fields, found {}", rec.len())));
        }
        let ts = field(&rec, 2, "timestamp_iso8601", line)?;
        let timestamp = parse_timestamp(ts, local_offset)
            .ok_or_else(|| Error::row(line, format!("unparseable timestamp {ts:?}")))?;
        let duration_s = field(&rec, 3, "duration_s", line)?
            .parse::<u64>()
            .map_err(|e| Error::row(line, format!("bad duration: {e}")))?;
        let direction = field(&rec, 4, "direction", line)?
            .parse()
            .map_err(|e: String| Error::row(line, e))?;
        out.push(CdrRecord {
            caller: field(&rec, 0, "caller", line)?.to_owned(),
            callee: field(&rec, 1, "callee", line)?.to_owned(),
            timestamp,
            duration_s,
            direction,
            tower: rec.get(5).unwrap_or("").to_owned(),
        });
    }
    Ok(out)
}

pub fn read_sms_csv<R: Read>(r: R, local_offset: FixedOffset) -> Result<Vec<SmsRecord>> {
    let mut rdr = csv_reader(r);
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(map_csv_error)?;
        let line = line_of(&rec);
        if rec.len() != 4 {
            return Err(Error::row(line, format!("expected 4 fields, found {}", rec.len())));
        }
        let ts = field(&rec, 2, "timestamp_iso8601", line)?;
        let timestamp = parse_timestamp(ts, local_offset)
            .ok_or_else(|| Error::row(line, format!("unparseable timestamp {ts:?}")))?;
        let direction = field(&rec, 3, "direction", line)?
            .parse()
            .map_err(|e: String| Error::row(line, e))?;
        out.push(SmsRecord {
            sender: field(&rec, 0, "sender", line)?.to_owned(),
            receiver: field(&rec, 1, "receiver", line)?.to_owned(),
            timestamp,
            direction,
        });
    }
    Ok(out)
}

pub fn write_cdr_csv<W: Write>(records: &[CdrRecord], w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["caller", "callee", "timestamp_iso8601", "duration_s", "direction", "tower"])?;
    for r in records {
        wtr.write_record([
            r.caller.as_str(),
            r.callee.as_str(),
            &format_timestamp(&r.timestamp),
            &r.duration_s.to_string(),
            r.direction.as_str(),
            r.tower.as_str(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_sms_csv<W: Write>(records: &[SmsRecord], w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["sender", "receiver", "timestamp_iso8601", "direction"])?;
    for r in records {
        wtr.write_record([
            r.sender.as_str(),
            r.receiver.as_str(),
            &format_timestamp(&r.timestamp),
            r.direction.as_str(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}
