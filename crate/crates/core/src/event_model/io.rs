//! CSV ingestion and emission of adoption and follow rows.
//!
//! Adoptions: header `user_id,tag_id,timestamp`.
//! Follows: header `src_id,dst_id` or `src_id,dst_id,since`; an empty
//! `since` field means the edge is untimestamped.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{AdoptionRow, FollowRow};
use crate::error::{Error, Result};
use crate::time::{parse_timestamp, TimeUnit, Timestamp};

pub const ADOPTIONS_HEADER: [&str; 3] = ["user_id", "tag_id", "timestamp"];
pub const FOLLOWS_HEADER: [&str; 2] = ["src_id", "dst_id"];
pub const FOLLOWS_TIMED_HEADER: [&str; 3] = ["src_id", "dst_id", "since"];

/// What to do with a row that cannot be parsed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RowPolicy {
    /// Fail on the first bad row.
    Strict,
    /// Drop bad rows and report them.
    #[default]
    Lenient,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct ReadOptions {
    pub time_unit: TimeUnit,
    pub policy: RowPolicy,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowIssue {
    pub line: u64,
    pub reason: String,
}

#[derive(Clone, Debug)]
pub struct ReadOutcome<T> {
    pub rows: Vec<T>,
    /// Data rows seen, including dropped ones.
    pub total_rows: usize,
    pub dropped: Vec<RowIssue>,
}

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input)
}

fn header_of<R: Read>(rdr: &mut csv::Reader<R>) -> Result<Vec<String>> {
    let header = rdr.headers().map_err(|e| Error::MalformedHeader {
        expected: "a UTF-8 CSV header".into(),
        found: e.to_string(),
    })?;
    Ok(header.iter().map(str::to_owned).collect())
}

fn header_error(expected: &[&str], found: &[String]) -> Error {
    Error::MalformedHeader {
        expected: expected.join(","),
        found: found.join(","),
    }
}

enum RowError {
    Malformed(String),
    Timestamp(String),
}

struct Collector<T> {
    policy: RowPolicy,
    out: ReadOutcome<T>,
}

impl<T> Collector<T> {
    fn new(policy: RowPolicy) -> Self {
        Self {
            policy,
            out: ReadOutcome {
                rows: Vec::new(),
                total_rows: 0,
                dropped: Vec::new(),
            },
        }
    }

    fn push(&mut self, line: u64, row: std::result::Result<T, RowError>) -> Result<()> {
        self.out.total_rows += 1;
        match row {
            Ok(r) => self.out.rows.push(r),
            Err(err) => {
                if self.policy == RowPolicy::Strict {
                    return Err(match err {
                        RowError::Malformed(reason) => Error::MalformedRow { line, reason },
                        RowError::Timestamp(value) => Error::BadTimestamp { line, value },
                    });
                }
                let reason = match err {
                    RowError::Malformed(reason) => reason,
                    RowError::Timestamp(value) => format!("unparsable timestamp {value:?}"),
                };
                self.out.dropped.push(RowIssue { line, reason });
            }
        }
        Ok(())
    }
}

fn records<R: Read, T>(
    rdr: &mut csv::Reader<R>,
    policy: RowPolicy,
    mut parse: impl FnMut(&csv::StringRecord) -> std::result::Result<T, RowError>,
) -> Result<ReadOutcome<T>> {
    let mut collector = Collector::new(policy);
    let mut record = csv::StringRecord::new();
    loop {
        match rdr.read_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {
                let line = record.position().map_or(0, |p| p.line());
                collector.push(line, parse(&record))?;
            }
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                if let csv::ErrorKind::Io(_) = e.kind() {
                    return Err(Error::Io(std::io::Error::other(e.to_string())));
                }
                collector.push(line, Err(RowError::Malformed(e.to_string())))?;
            }
        }
    }
    Ok(collector.out)
}

fn field<'a>(record: &'a csv::StringRecord, i: usize, name: &str) -> std::result::Result<&'a str, RowError> {
    match record.get(i) {
        Some(v) if !v.is_empty() => Ok(v),
        _ => Err(RowError::Malformed(format!("empty {name}"))),
    }
}

fn timestamp(raw: &str, unit: TimeUnit) -> std::result::Result<Timestamp, RowError> {
    parse_timestamp(raw, unit).ok_or_else(|| RowError::Timestamp(raw.to_owned()))
}

pub fn read_adoptions<R: Read>(input: R, options: ReadOptions) -> Result<ReadOutcome<AdoptionRow>> {
    let mut rdr = reader(input);
    let header = header_of(&mut rdr)?;
    if header != ADOPTIONS_HEADER {
        return Err(header_error(&ADOPTIONS_HEADER, &header));
    }
    records(&mut rdr, options.policy, |r| {
        if r.len() != 3 {
            return Err(RowError::Malformed(format!("expected 3 fields, found {}", r.len())));
        }
        Ok(AdoptionRow {
            user: field(r, 0, "user_id")?.to_owned(),
            tag: field(r, 1, "tag_id")?.to_owned(),
            time: timestamp(&r[2], options.time_unit)?,
        })
    })
}

pub fn read_follows<R: Read>(input: R, options: ReadOptions) -> Result<ReadOutcome<FollowRow>> {
    let mut rdr = reader(input);
    let header = header_of(&mut rdr)?;
    let timed = if header == FOLLOWS_TIMED_HEADER {
        true
    } else if header == FOLLOWS_HEADER {
        false
    } else {
        return Err(header_error(&FOLLOWS_TIMED_HEADER, &header));
    };
    let width = if timed { 3 } else { 2 };
    records(&mut rdr, options.policy, |r| {
        if r.len() != width {
            return Err(RowError::Malformed(format!(
                "expected {width} fields, found {}",
                r.len()
            )));
        }
        let since = match r.get(2) {
            Some(s) if !s.is_empty() => Some(timestamp(s, options.time_unit)?),
            _ => None,
        };
        Ok(FollowRow {
            src: field(r, 0, "src_id")?.to_owned(),
            dst: field(r, 1, "dst_id")?.to_owned(),
            since,
        })
    })
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Io(std::io::Error::other(format!("{other:?}"))),
    }
}

/// Writes adoption rows; timestamps are emitted verbatim as integers.
pub fn write_adoptions<'a, W: Write>(
    out: W,
    rows: impl IntoIterator<Item = (&'a str, &'a str, i64)>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(ADOPTIONS_HEADER).map_err(csv_err)?;
    for (user, tag, t) in rows {
        w.write_record([user, tag, &t.to_string()]).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes untimestamped follow rows.
pub fn write_follows<'a, W: Write>(out: W, rows: impl IntoIterator<Item = (&'a str, &'a str)>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(FOLLOWS_HEADER).map_err(csv_err)?;
    for (src, dst) in rows {
        w.write_record([src, dst]).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}
