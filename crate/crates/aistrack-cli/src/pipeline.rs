//! Shared plumbing for the pipeline commands: directory listing, the
//! read → dedupe → filter → group sequence, and summary emission.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;

use aistrack::decode::VesselStatic;
use aistrack::filters::{filter_messages, DropStats};
use aistrack::ingest::{self, MessageStream};

use crate::config::Resolved;

/// Sorted list of `.csv` files directly inside `dir`.
pub fn day_files(dir: &Path) -> anyhow::Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    let entries = std::fs::read_dir(dir)
        .with_context(|| format!("cannot read directory {}", dir.display()))?;
    for entry in entries {
        let path = entry?.path();
        if path.extension().and_then(|e| e.to_str()) == Some("csv") {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

/// A label like `2021_07_01..2021_07_09` derived from sorted file stems.
pub fn window_label(files: &[PathBuf]) -> String {
    let stem = |p: &PathBuf| {
        p.file_stem().and_then(|s| s.to_str()).unwrap_or("unknown").to_string()
    };
    match (files.first(), files.last()) {
        (Some(first), Some(last)) if first != last => {
            format!("{}..{}", stem(first), stem(last))
        }
        (Some(only), _) => stem(only),
        _ => "empty".to_string(),
    }
}

#[derive(Debug, Serialize)]
pub struct StageCounts {
    pub raw_messages: u64,
    pub skipped_rows: u64,
    pub duplicates: u64,
    pub duplicate_pct: f64,
    pub drop_stats: DropStats,
    pub kept_messages: u64,
    pub vessels: u64,
}

pub struct Prepared {
    pub streams: Vec<MessageStream>,
    pub statics: BTreeMap<u32, VesselStatic>,
    pub counts: StageCounts,
}

/// Runs the shared front half of the pipeline: read day files, sort by time,
/// drop multi-station duplicates, apply the message filters, group by MMSI.
pub fn prepare(
    dynamic_dir: &Path,
    static_dir: Option<&Path>,
    resolved: &Resolved,
) -> anyhow::Result<Prepared> {
    let dynamic = day_files(dynamic_dir)?;
    let static_files = match static_dir {
        Some(dir) => day_files(dir)?,
        None => Vec::new(),
    };
    let outcome = ingest::read_day_files(&dynamic, &static_files)?;
    let raw_messages = outcome.messages.len() as u64;

    let mut messages = outcome.messages;
    ingest::sort_by_time(&mut messages);
    let deduped = ingest::dedupe(&messages, ingest::F_MIN_SECONDS);
    let duplicates = raw_messages - deduped.len() as u64;

    let (kept, drop_stats) =
        filter_messages(deduped, &resolved.bounds, resolved.sog_min, resolved.sog_max);
    let kept_messages = kept.len() as u64;
    let streams = ingest::group_by_mmsi(kept);
    let statics = ingest::collect_statics(&outcome.statics);

    Ok(Prepared {
        counts: StageCounts {
            raw_messages,
            skipped_rows: outcome.skipped_rows,
            duplicates,
            duplicate_pct: if raw_messages > 0 {
                duplicates as f64 / raw_messages as f64 * 100.0
            } else {
                0.0
            },
            drop_stats,
            kept_messages,
            vessels: streams.len() as u64,
        },
        streams,
        statics,
    })
}

/// Prints a machine-readable summary on standard output.
pub fn emit_summary<T: Serialize>(summary: &T) -> anyhow::Result<()> {
    println!("{}", serde_json::to_string_pretty(summary)?);
    Ok(())
}

/// Installs the global worker pool. Safe to call once per process.
pub fn init_jobs(jobs: usize) {
    let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
}
