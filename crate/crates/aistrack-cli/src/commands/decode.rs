//! `aistrack decode`: raw day files in, decoded day files out.
//!
//! Input files are either day CSVs in the raw schema (the `raw_message`
//! column carries the sentences; other columns may be blank) or plain text
//! files of `epoch_seconds,sentence` lines. Decoded dynamic reports go to
//! `dest/dynamic/<name>.csv`, static reports to `dest/static/<name>.csv`,
//! both in the decoded day-file schema.

use std::path::{Path, PathBuf};

use anyhow::Context;
use rayon::prelude::*;
use serde::Serialize;

use aistrack::decode::{
    decode_dynamic, decode_static, parse_sentence, DecodeError, MultipartAssembler, RawSentence,
};
use aistrack::ingest::DECODED_HEADER;

use crate::pipeline::emit_summary;

#[derive(Debug, clap::Args)]
pub struct DecodeArgs {
    /// Directory of raw day files (.csv or .nmea/.txt).
    #[arg(long)]
    pub source: PathBuf,
    /// Output directory; dynamic/ and static/ subdirectories are created.
    #[arg(long)]
    pub dest: PathBuf,
}

#[derive(Debug, Default, Clone, Copy, Serialize)]
struct SkipCounters {
    checksum_mismatch: u64,
    malformed: u64,
    unsupported_type: u64,
    truncated: u64,
    out_of_range: u64,
    incomplete_multipart: u64,
    missing_timestamp: u64,
}

impl SkipCounters {
    fn count(&mut self, err: &DecodeError) {
        match err {
            DecodeError::ChecksumMismatch { .. } => self.checksum_mismatch += 1,
            DecodeError::MalformedFraming(_)
            | DecodeError::UnknownTalker(_)
            | DecodeError::InvalidPayloadChar(_)
            | DecodeError::MissingFragment { .. }
            | DecodeError::DuplicateFragment { .. } => self.malformed += 1,
            DecodeError::TruncatedPayload { .. } => self.truncated += 1,
            DecodeError::UnsupportedType(_) => self.unsupported_type += 1,
            DecodeError::OutOfRangeField { .. } => self.out_of_range += 1,
        }
    }

    fn add(&mut self, other: &SkipCounters) {
        self.checksum_mismatch += other.checksum_mismatch;
        self.malformed += other.malformed;
        self.unsupported_type += other.unsupported_type;
        self.truncated += other.truncated;
        self.out_of_range += other.out_of_range;
        self.incomplete_multipart += other.incomplete_multipart;
        self.missing_timestamp += other.missing_timestamp;
    }
}

#[derive(Debug, Serialize)]
struct DecodeSummary {
    files: usize,
    rows_read: u64,
    decoded_dynamic: u64,
    decoded_static: u64,
    skipped: SkipCounters,
}

#[derive(Default)]
struct FileOutput {
    dynamic: Vec<[String; 7]>,
    static_rows: Vec<[String; 7]>,
    rows_read: u64,
    skipped: SkipCounters,
}

/// One sentence with its reception metadata, as read from a raw file.
struct TimedSentence {
    recv_time: f64,
    originator: String,
    raw: String,
    sentence: RawSentence,
}

fn decode_completed(
    recv_time: f64,
    originator: &str,
    raw: String,
    payload: aistrack::decode::BitPayload,
    out: &mut FileOutput,
) {
    let msg_type = if payload.len() >= 6 { payload.u32_at(0, 6) as u8 } else { 0 };
    match msg_type {
        1 | 2 | 3 | 18 => match decode_dynamic(&payload) {
            Ok(msg) => {
                let (lat, lon) = match (msg.lat, msg.lon) {
                    (Some(lat), Some(lon)) => (format!("{lat:.7}"), format!("{lon:.7}")),
                    (lat, lon) => (
                        lat.map(|v| format!("{v:.7}")).unwrap_or_default(),
                        lon.map(|v| format!("{v:.7}")).unwrap_or_default(),
                    ),
                };
                out.dynamic.push([
                    recv_time.to_string(),
                    msg.msg_type.to_string(),
                    lat,
                    lon,
                    raw,
                    msg.mmsi.to_string(),
                    originator.to_string(),
                ]);
            }
            Err(e) => out.skipped.count(&e),
        },
        5 | 24 => match decode_static(&payload) {
            Ok(v) => out.static_rows.push([
                recv_time.to_string(),
                msg_type.to_string(),
                String::new(),
                String::new(),
                raw,
                v.mmsi.to_string(),
                originator.to_string(),
            ]),
            Err(e) => out.skipped.count(&e),
        },
        other => out.skipped.count(&DecodeError::UnsupportedType(other)),
    }
}

/// Reception metadata accumulated for one open fragment set, keyed like the
/// assembler itself.
struct PendingSet {
    key: (Option<char>, Option<u8>),
    recv_time: f64,
    originator: String,
    raw_parts: Vec<String>,
}

/// Feeds timed sentences through fragment assembly and decoding.
fn process_sentences(items: Vec<TimedSentence>, out: &mut FileOutput) {
    let mut assembler = MultipartAssembler::new();
    let mut pending: Vec<PendingSet> = Vec::new();
    for item in items {
        let key = (item.sentence.channel, item.sentence.sequence_id);
        let multipart = item.sentence.fragment_count > 1;
        if multipart {
            match pending.iter_mut().find(|p| p.key == key) {
                Some(set) => set.raw_parts.push(item.raw.clone()),
                None => pending.push(PendingSet {
                    key,
                    recv_time: item.recv_time,
                    originator: item.originator.clone(),
                    raw_parts: vec![item.raw.clone()],
                }),
            }
        }
        match assembler.push(item.sentence) {
            Ok(Some(payload)) => {
                if multipart {
                    let idx = pending.iter().position(|p| p.key == key).unwrap();
                    let set = pending.remove(idx);
                    decode_completed(
                        set.recv_time,
                        &set.originator,
                        set.raw_parts.join(" "),
                        payload,
                        out,
                    );
                } else {
                    decode_completed(item.recv_time, &item.originator, item.raw, payload, out);
                }
            }
            Ok(None) => {}
            Err(e) => out.skipped.count(&e),
        }
    }
    out.skipped.incomplete_multipart += assembler.open_sets() as u64;
}

fn parse_raw_csv(path: &Path) -> anyhow::Result<FileOutput> {
    let mut out = FileOutput::default();
    let file = std::fs::File::open(path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    let mut reader = csv::Reader::from_reader(file);
    let headers = reader.headers()?.clone();
    anyhow::ensure!(
        headers.iter().eq(DECODED_HEADER),
        "{}: header does not match the raw day-file schema",
        path.display()
    );
    let mut items = Vec::new();
    for record in reader.records() {
        let record = record?;
        out.rows_read += 1;
        let Ok(recv_time) = record[0].trim().parse::<f64>() else {
            out.skipped.missing_timestamp += 1;
            continue;
        };
        let originator = record[6].trim().to_string();
        for raw in record[4].split_whitespace() {
            match parse_sentence(raw) {
                Ok(sentence) => items.push(TimedSentence {
                    recv_time,
                    originator: originator.clone(),
                    raw: raw.to_string(),
                    sentence,
                }),
                Err(e) => out.skipped.count(&e),
            }
        }
    }
    process_sentences(items, &mut out);
    Ok(out)
}

fn parse_raw_text(path: &Path) -> anyhow::Result<FileOutput> {
    let mut out = FileOutput::default();
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    let mut items = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        out.rows_read += 1;
        // "epoch_seconds,!AIVDM,..." — the timestamp ends at the first comma.
        let Some((ts_text, raw)) = line.split_once(',') else {
            out.skipped.missing_timestamp += 1;
            continue;
        };
        let Ok(recv_time) = ts_text.trim().parse::<f64>() else {
            out.skipped.missing_timestamp += 1;
            continue;
        };
        match parse_sentence(raw) {
            Ok(sentence) => items.push(TimedSentence {
                recv_time,
                originator: String::new(),
                raw: raw.to_string(),
                sentence,
            }),
            Err(e) => out.skipped.count(&e),
        }
    }
    process_sentences(items, &mut out);
    Ok(out)
}

fn write_day_file(path: &Path, rows: &[[String; 7]]) -> anyhow::Result<()> {
    let mut writer = csv::Writer::from_path(path)
        .with_context(|| format!("cannot write {}", path.display()))?;
    writer.write_record(DECODED_HEADER)?;
    for row in rows {
        writer.write_record(row)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn run(args: &DecodeArgs) -> anyhow::Result<()> {
    let mut inputs = Vec::new();
    let entries = std::fs::read_dir(&args.source)
        .with_context(|| format!("cannot read source directory {}", args.source.display()))?;
    for entry in entries {
        let path = entry?.path();
        match path.extension().and_then(|e| e.to_str()) {
            Some("csv") | Some("nmea") | Some("txt") => inputs.push(path),
            _ => {}
        }
    }
    inputs.sort();

    let dynamic_dir = args.dest.join("dynamic");
    let static_dir = args.dest.join("static");
    std::fs::create_dir_all(&dynamic_dir)?;
    std::fs::create_dir_all(&static_dir)?;

    let outputs: Vec<(PathBuf, FileOutput)> = inputs
        .par_iter()
        .map(|path| {
            let parsed = if path.extension().and_then(|e| e.to_str()) == Some("csv") {
                parse_raw_csv(path)?
            } else {
                parse_raw_text(path)?
            };
            Ok((path.clone(), parsed))
        })
        .collect::<anyhow::Result<_>>()?;

    let mut summary = DecodeSummary {
        files: outputs.len(),
        rows_read: 0,
        decoded_dynamic: 0,
        decoded_static: 0,
        skipped: SkipCounters::default(),
    };
    for (path, out) in &outputs {
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("day");
        let name = format!("{stem}.csv");
        if !out.dynamic.is_empty() || out.static_rows.is_empty() {
            write_day_file(&dynamic_dir.join(&name), &out.dynamic)?;
        }
        if !out.static_rows.is_empty() {
            write_day_file(&static_dir.join(&name), &out.static_rows)?;
        }
        summary.rows_read += out.rows_read;
        summary.decoded_dynamic += out.dynamic.len() as u64;
        summary.decoded_static += out.static_rows.len() as u64;
        summary.skipped.add(&out.skipped);
    }
    emit_summary(&summary)
}
