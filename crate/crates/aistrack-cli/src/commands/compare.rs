//! `aistrack compare`: runs the quantile splitter and both reference methods
//! over the same streams and writes the comparison table.

use std::path::PathBuf;

use anyhow::{bail, Context};
use serde::Serialize;

use aistrack::baselines::{
    compare, filter_forward_scan, split_fixed_thresholds, MethodResult,
};
use aistrack::quantiles::QuantileTable;
use aistrack::splitter::extract_all;

use crate::config::{resolve, CommonOverrides, FileConfig};
use crate::pipeline::{emit_summary, init_jobs, prepare, StageCounts};

#[derive(Debug, clap::Args)]
pub struct CompareArgs {
    /// Directory of decoded dynamic day files.
    #[arg(long)]
    pub decoded: PathBuf,
    /// Directory of decoded static day files.
    #[arg(long = "static")]
    pub static_dir: Option<PathBuf>,
    /// Quantile table produced by `calibrate`.
    #[arg(long)]
    pub table: PathBuf,
    /// Tail probability of the split thresholds.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Forward-scan turning-rate limit in degrees per second.
    #[arg(long)]
    pub c_lim: Option<f64>,
    /// Forward-scan speed limit in knots.
    #[arg(long)]
    pub v_lim: Option<f64>,
    /// Output CSV path.
    #[arg(long)]
    pub out: PathBuf,
    /// Config file path (TOML); `AISTRACK_CONFIG` is honored too.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: CommonOverrides,
}

#[derive(Debug, Serialize)]
struct CompareSummary {
    counts: StageCounts,
    alpha: f64,
    methods: Vec<String>,
    out: PathBuf,
}

pub fn run(args: &CompareArgs) -> anyhow::Result<()> {
    let file_config = FileConfig::load(args.config.as_deref())?;
    let resolved = resolve(&args.overrides, &file_config, args.alpha, None)?;
    init_jobs(resolved.jobs);

    let (Some(c_lim), Some(v_lim)) = (args.c_lim, args.v_lim) else {
        bail!("compare requires --c-lim and --v-lim for the forward-scan method");
    };

    let prepared = prepare(&args.decoded, args.static_dir.as_deref(), &resolved)?;
    let table = QuantileTable::load(&args.table)?;

    // Proposed method over all streams.
    let extraction = extract_all(
        &prepared.streams,
        &prepared.statics,
        Some(&table),
        resolved.alpha,
        false,
    )?;
    let proposed = MethodResult {
        trajectories: extraction
            .ships
            .values()
            .flat_map(|s| s.trajectories.iter().cloned())
            .collect(),
        discarded: extraction.stats.dropped_singletons as usize,
        split_points: Some(extraction.stats.split_points as usize),
        rejoined: extraction.stats.rejoined_tracks as usize,
    };

    // Reference methods, aggregated across streams in MMSI order.
    let mut zhao = MethodResult {
        trajectories: Vec::new(),
        discarded: 0,
        split_points: Some(0),
        rejoined: 0,
    };
    let mut guo =
        MethodResult { trajectories: Vec::new(), discarded: 0, split_points: None, rejoined: 0 };
    for stream in &prepared.streams {
        let z = split_fixed_thresholds(stream, None)?;
        zhao.trajectories.extend(z.trajectories);
        zhao.discarded += z.discarded;
        zhao.split_points = zhao.split_points.map(|s| s + z.split_points.unwrap_or(0));
        zhao.rejoined += z.rejoined;

        let g = filter_forward_scan(stream, c_lim, v_lim);
        guo.trajectories.extend(g.trajectories);
        guo.discarded += g.discarded;
    }

    let named = vec![
        ("proposed".to_string(), proposed),
        ("zhao".to_string(), zhao),
        ("guo".to_string(), guo),
    ];
    let report = compare(&named);
    let file = std::fs::File::create(&args.out)
        .with_context(|| format!("cannot write {}", args.out.display()))?;
    report.write_csv(std::io::BufWriter::new(file))?;

    emit_summary(&CompareSummary {
        counts: prepared.counts,
        alpha: resolved.alpha,
        methods: named.into_iter().map(|(name, _)| name).collect(),
        out: args.out.clone(),
    })
}
