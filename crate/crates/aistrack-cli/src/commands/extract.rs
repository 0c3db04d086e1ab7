//! `aistrack extract`: turns decoded day files into trajectories, either via
//! the quantile-calibrated splitter or one of the reference methods.

use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{bail, Context};
use serde::Serialize;

use aistrack::baselines::{filter_forward_scan, split_fixed_thresholds, MethodResult};
use aistrack::export::{write_trajectories, TrajectoryFormat};
use aistrack::ingest::MessageStream;
use aistrack::quantiles::QuantileTable;
use aistrack::splitter::{extract_all, TargetShip};

use crate::config::{resolve, CommonOverrides, FileConfig};
use crate::pipeline::{emit_summary, init_jobs, prepare, StageCounts};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Baseline {
    Zhao,
    Guo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum OutputFormat {
    Csv,
    Geojson,
}

#[derive(Debug, clap::Args)]
pub struct ExtractArgs {
    /// Directory of decoded dynamic day files.
    #[arg(long)]
    pub decoded: PathBuf,
    /// Directory of decoded static day files.
    #[arg(long = "static")]
    pub static_dir: Option<PathBuf>,
    /// Quantile table produced by `calibrate`.
    #[arg(long)]
    pub table: Option<PathBuf>,
    /// Tail probability of the split thresholds.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Build one trajectory per vessel without split-point detection.
    #[arg(long)]
    pub skip_split: bool,
    /// Run a reference method instead of the quantile splitter.
    #[arg(long, value_enum)]
    pub baseline: Option<Baseline>,
    /// Forward-scan turning-rate limit in degrees per second.
    #[arg(long)]
    pub c_lim: Option<f64>,
    /// Forward-scan speed limit in knots.
    #[arg(long)]
    pub v_lim: Option<f64>,
    /// Trajectory file format.
    #[arg(long, value_enum, default_value = "csv")]
    pub format: OutputFormat,
    /// Config file path (TOML); `AISTRACK_CONFIG` is honored too.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: CommonOverrides,
}

#[derive(Debug, Serialize)]
struct ExtractSummary {
    counts: StageCounts,
    method: String,
    alpha: Option<f64>,
    raw_messages: u64,
    duplicate_pct: f64,
    split_points: u64,
    rejoined_tracks: u64,
    trajectory_count: u64,
    avg_trajectory_len_nm: f64,
    discarded_messages: u64,
    trajectories: PathBuf,
}

fn ships_from_methods(
    streams: &[MessageStream],
    statics: &BTreeMap<u32, aistrack::VesselStatic>,
    results: Vec<(u32, MethodResult)>,
) -> (BTreeMap<u32, TargetShip>, u64, u64, u64) {
    let mut ships = BTreeMap::new();
    let mut split_points = 0u64;
    let mut rejoined = 0u64;
    let mut discarded = 0u64;
    debug_assert_eq!(streams.len(), results.len());
    for (mmsi, result) in results {
        split_points += result.split_points.unwrap_or(0) as u64;
        rejoined += result.rejoined as u64;
        discarded += result.discarded as u64;
        ships.insert(
            mmsi,
            TargetShip {
                mmsi,
                static_info: statics.get(&mmsi).copied(),
                trajectories: result.trajectories,
            },
        );
    }
    (ships, split_points, rejoined, discarded)
}

pub fn run(args: &ExtractArgs) -> anyhow::Result<()> {
    let file_config = FileConfig::load(args.config.as_deref())?;
    let resolved = resolve(&args.overrides, &file_config, args.alpha, None)?;
    init_jobs(resolved.jobs);

    let prepared = prepare(&args.decoded, args.static_dir.as_deref(), &resolved)?;
    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("cannot create {}", args.out.display()))?;

    let (method, ships, split_points, rejoined, trajectory_count, avg_len_nm, discarded, alpha) =
        match args.baseline {
            None => {
                let table = match (&args.table, args.skip_split) {
                    (Some(path), _) => Some(QuantileTable::load(path)?),
                    (None, true) => None,
                    (None, false) => {
                        bail!("--table is required unless --skip-split is given")
                    }
                };
                let extraction = extract_all(
                    &prepared.streams,
                    &prepared.statics,
                    table.as_ref(),
                    resolved.alpha,
                    args.skip_split,
                )?;
                let stats = extraction.stats;
                (
                    if args.skip_split { "construct_only" } else { "quantile_split" },
                    extraction.ships,
                    stats.split_points,
                    stats.rejoined_tracks,
                    stats.trajectory_count,
                    stats.avg_trajectory_len_nm,
                    stats.dropped_singletons,
                    Some(resolved.alpha),
                )
            }
            Some(Baseline::Zhao) => {
                // The day-file schema carries reception times only.
                eprintln!(
                    "warning: corpus has no send timestamps; skipping the send/receive plausibility filter"
                );
                let results = prepared
                    .streams
                    .iter()
                    .map(|s| Ok((s.mmsi, split_fixed_thresholds(s, None)?)))
                    .collect::<anyhow::Result<Vec<_>>>()?;
                let (ships, splits, rejoined, discarded) =
                    ships_from_methods(&prepared.streams, &prepared.statics, results);
                let (count, avg) = trajectory_stats(&ships);
                ("zhao", ships, splits, rejoined, count, avg, discarded, None)
            }
            Some(Baseline::Guo) => {
                let (Some(c_lim), Some(v_lim)) = (args.c_lim, args.v_lim) else {
                    bail!("--baseline guo requires --c-lim and --v-lim");
                };
                let results: Vec<(u32, MethodResult)> = prepared
                    .streams
                    .iter()
                    .map(|s| (s.mmsi, filter_forward_scan(s, c_lim, v_lim)))
                    .collect();
                let (ships, splits, rejoined, discarded) =
                    ships_from_methods(&prepared.streams, &prepared.statics, results);
                let (count, avg) = trajectory_stats(&ships);
                ("guo", ships, splits, rejoined, count, avg, discarded, None)
            }
        };

    let (file_name, format) = match args.format {
        OutputFormat::Csv => ("trajectories.csv", TrajectoryFormat::Csv),
        OutputFormat::Geojson => ("trajectories.geojson", TrajectoryFormat::GeoJson),
    };
    let out_file = args.out.join(file_name);
    write_trajectories(&ships, &out_file, format)?;

    emit_summary(&ExtractSummary {
        raw_messages: prepared.counts.raw_messages,
        duplicate_pct: prepared.counts.duplicate_pct,
        counts: prepared.counts,
        method: method.to_string(),
        alpha,
        split_points,
        rejoined_tracks: rejoined,
        trajectory_count,
        avg_trajectory_len_nm: avg_len_nm,
        discarded_messages: discarded,
        trajectories: out_file,
    })
}

fn trajectory_stats(ships: &BTreeMap<u32, TargetShip>) -> (u64, f64) {
    let mut count = 0u64;
    let mut total_nm = 0.0;
    for ship in ships.values() {
        for traj in &ship.trajectories {
            count += 1;
            total_nm += traj.path_length_nm();
        }
    }
    (count, if count > 0 { total_nm / count as f64 } else { 0.0 })
}
