//! Day-file reading, multi-station deduplication, and per-vessel grouping.
//!
//! Decoded day files are CSV with exactly this header:
//!
//! ```text
//! timestamp,message_id,latitude,longitude,raw_message,MMSI,originator
//! ```
//!
//! Timestamps are either epoch seconds or ISO-8601 UTC; the format is
//! detected per file from the first data row. Dynamic files carry message
//! types 1/2/3/18, static files types 5/24. Positions and reception metadata
//! come from the columns; speed, course, and the message type are decoded
//! from `raw_message` (they are not part of the column schema). A multipart
//! message stores all of its sentences space-joined in one `raw_message`
//! field.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use chrono::{DateTime, NaiveDateTime};
use rayon::prelude::*;
use thiserror::Error;

use crate::decode::{self, AisMessage, VesselStatic};

/// Exact column set of a decoded day file.
pub const DECODED_HEADER: [&str; 7] = [
    "timestamp",
    "message_id",
    "latitude",
    "longitude",
    "raw_message",
    "MMSI",
    "originator",
];

/// Minimum sending interval of the transport in seconds; duplicates from
/// multiple base stations arrive closer together than this.
pub const F_MIN_SECONDS: f64 = 2.0;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    FileUnreadable {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: header does not match the decoded day-file schema")]
    SchemaMismatch { path: PathBuf },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

/// Messages from one transmitter, ordered by reception time.
#[derive(Debug, Clone, PartialEq)]
pub struct MessageStream {
    pub mmsi: u32,
    pub messages: Vec<AisMessage>,
}

/// Everything read from a set of day files.
#[derive(Debug, Default)]
pub struct ReadOutcome {
    pub messages: Vec<AisMessage>,
    pub statics: Vec<VesselStatic>,
    /// Rows skipped because a column failed to parse or the payload did not decode.
    pub skipped_rows: u64,
}

#[derive(Clone, Copy)]
enum TimestampFormat {
    Epoch,
    Iso8601,
    SpaceSeparated,
}

fn detect_timestamp_format(sample: &str) -> Option<TimestampFormat> {
    if sample.parse::<f64>().is_ok() {
        Some(TimestampFormat::Epoch)
    } else if DateTime::parse_from_rfc3339(sample).is_ok() {
        Some(TimestampFormat::Iso8601)
    } else if NaiveDateTime::parse_from_str(sample, "%Y-%m-%d %H:%M:%S%.f").is_ok() {
        Some(TimestampFormat::SpaceSeparated)
    } else {
        None
    }
}

fn parse_timestamp(text: &str, format: TimestampFormat) -> Option<f64> {
    match format {
        TimestampFormat::Epoch => text.parse::<f64>().ok().filter(|t| t.is_finite()),
        TimestampFormat::Iso8601 => DateTime::parse_from_rfc3339(text)
            .ok()
            .map(|dt| dt.timestamp() as f64 + f64::from(dt.timestamp_subsec_millis()) / 1000.0),
        TimestampFormat::SpaceSeparated => NaiveDateTime::parse_from_str(text, "%Y-%m-%d %H:%M:%S%.f")
            .ok()
            .map(|dt| {
                let dt = dt.and_utc();
                dt.timestamp() as f64 + f64::from(dt.timestamp_subsec_millis()) / 1000.0
            }),
    }
}

/// Decodes the sentence(s) held in one `raw_message` field.
fn decode_raw_field(raw: &str) -> Result<decode::BitPayload, decode::DecodeError> {
    let sentences: Vec<_> = raw
        .split_whitespace()
        .map(decode::parse_sentence)
        .collect::<Result<_, _>>()?;
    decode::assemble(&sentences)
}

struct ParsedFile {
    messages: Vec<AisMessage>,
    statics: Vec<VesselStatic>,
    skipped: u64,
}

fn read_one_file(path: &Path, is_static: bool) -> Result<ParsedFile, IngestError> {
    let file = std::fs::File::open(path).map_err(|source| IngestError::FileUnreadable {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = csv::Reader::from_reader(file);
    let headers = reader
        .headers()
        .map_err(|source| IngestError::Csv { path: path.to_path_buf(), source })?;
    if headers.iter().ne(DECODED_HEADER) {
        return Err(IngestError::SchemaMismatch { path: path.to_path_buf() });
    }

    let mut out = ParsedFile { messages: Vec::new(), statics: Vec::new(), skipped: 0 };
    let mut ts_format: Option<TimestampFormat> = None;
    for record in reader.records() {
        let record = record
            .map_err(|source| IngestError::Csv { path: path.to_path_buf(), source })?;
        if record.len() != DECODED_HEADER.len() {
            out.skipped += 1;
            continue;
        }
        let ts_text = record[0].trim();
        let format = match ts_format {
            Some(f) => f,
            None => match detect_timestamp_format(ts_text) {
                Some(f) => {
                    ts_format = Some(f);
                    f
                }
                None => {
                    out.skipped += 1;
                    continue;
                }
            },
        };
        let Some(recv_time) = parse_timestamp(ts_text, format) else {
            out.skipped += 1;
            continue;
        };

        // Positions come from the columns; empty means unavailable.
        let lat = match record[2].trim() {
            "" => None,
            text => match text.parse::<f64>() {
                Ok(v) => Some(v),
                Err(_) => {
                    out.skipped += 1;
                    continue;
                }
            },
        };
        let lon = match record[3].trim() {
            "" => None,
            text => match text.parse::<f64>() {
                Ok(v) => Some(v),
                Err(_) => {
                    out.skipped += 1;
                    continue;
                }
            },
        };

        let payload = match decode_raw_field(&record[4]) {
            Ok(p) => p,
            Err(_) => {
                out.skipped += 1;
                continue;
            }
        };
        let originator = match record[6].trim() {
            "" => None,
            text => Some(text.to_string()),
        };

        if is_static {
            match decode::decode_static(&payload) {
                Ok(v) => out.statics.push(v),
                Err(_) => out.skipped += 1,
            }
        } else {
            match decode::decode_dynamic(&payload) {
                Ok(m) => {
                    let mut m = m.with_reception(recv_time, originator);
                    m.lat = lat;
                    m.lon = lon;
                    out.messages.push(m);
                }
                Err(_) => out.skipped += 1,
            }
        }
    }
    Ok(out)
}

/// Reads dynamic and static day files. Files are parsed in parallel; results
/// keep the order of the sorted path lists, so the outcome is deterministic.
pub fn read_day_files(
    dynamic: &[PathBuf],
    static_files: &[PathBuf],
) -> Result<ReadOutcome, IngestError> {
    let mut dynamic: Vec<_> = dynamic.to_vec();
    dynamic.sort();
    let mut static_files: Vec<_> = static_files.to_vec();
    static_files.sort();

    let parsed_dynamic: Vec<_> = dynamic
        .par_iter()
        .map(|p| read_one_file(p, false))
        .collect::<Result<_, _>>()?;
    let parsed_static: Vec<_> = static_files
        .par_iter()
        .map(|p| read_one_file(p, true))
        .collect::<Result<_, _>>()?;

    let mut outcome = ReadOutcome::default();
    for part in parsed_dynamic.into_iter().chain(parsed_static) {
        outcome.messages.extend(part.messages);
        outcome.statics.extend(part.statics);
        outcome.skipped_rows += part.skipped;
    }
    Ok(outcome)
}

/// Merges static reports into one record per MMSI, preferring the first
/// report that knows each field.
pub fn collect_statics(statics: &[VesselStatic]) -> BTreeMap<u32, VesselStatic> {
    let mut map: BTreeMap<u32, VesselStatic> = BTreeMap::new();
    for s in statics {
        let entry = map.entry(s.mmsi).or_insert(*s);
        if entry.ship_length.is_none() {
            entry.ship_length = s.ship_length;
        }
        if entry.ship_type.is_none() {
            entry.ship_type = s.ship_type;
        }
    }
    map
}

/// Sorts messages by reception time, keeping the input order for ties.
pub fn sort_by_time(messages: &mut [AisMessage]) {
    messages.sort_by(|a, b| a.recv_time.total_cmp(&b.recv_time));
}

/// Removes multi-station duplicates.
///
/// A message is dropped when an already-kept message with identical payload
/// content from a *different* originator was received less than `f_min`
/// seconds earlier. Repeats from the same station are genuine retransmissions
/// and stay. For equal reception times the lexicographically smaller
/// originator survives. Input must be sorted by reception time; the pass is
/// idempotent.
pub fn dedupe(messages: &[AisMessage], f_min: f64) -> Vec<AisMessage> {
    let mut kept: Vec<AisMessage> = Vec::with_capacity(messages.len());
    for msg in messages {
        let mut drop = false;
        // Only the tail of the kept list can be within the window.
        for prev in kept.iter_mut().rev() {
            if msg.recv_time - prev.recv_time >= f_min {
                break;
            }
            if prev.content_eq(msg) && prev.originator != msg.originator {
                if prev.recv_time == msg.recv_time
                    && msg.originator < prev.originator
                {
                    *prev = msg.clone();
                }
                drop = true;
                break;
            }
        }
        if !drop {
            kept.push(msg.clone());
        }
    }
    kept
}

/// Groups messages into per-MMSI streams, each sorted by reception time with
/// ties keeping input order. Streams come back ordered by MMSI.
pub fn group_by_mmsi(messages: Vec<AisMessage>) -> Vec<MessageStream> {
    let mut groups: BTreeMap<u32, Vec<AisMessage>> = BTreeMap::new();
    for msg in messages {
        groups.entry(msg.mmsi).or_default().push(msg);
    }
    groups
        .into_iter()
        .map(|(mmsi, mut messages)| {
            sort_by_time(&mut messages);
            MessageStream { mmsi, messages }
        })
        .collect()
}
