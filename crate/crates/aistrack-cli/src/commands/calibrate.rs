//! `aistrack calibrate`: builds the quantile table from decoded day files.

use std::path::PathBuf;

use serde::Serialize;

use aistrack::quantiles::{calibrate, CalibrateOptions, LengthBins};

use crate::config::{resolve, CommonOverrides, FileConfig};
use crate::pipeline::{day_files, emit_summary, init_jobs, prepare, window_label, StageCounts};

#[derive(Debug, clap::Args)]
pub struct CalibrateArgs {
    /// Directory of decoded dynamic day files.
    #[arg(long)]
    pub decoded: PathBuf,
    /// Directory of decoded static day files.
    #[arg(long = "static")]
    pub static_dir: PathBuf,
    /// Output path of the quantile table (JSON).
    #[arg(long)]
    pub out: PathBuf,
    /// Probability of the temporal gate quantile.
    #[arg(long)]
    pub gate_p: Option<f64>,
    /// Calibrate even when no vessel has usable static data.
    #[arg(long)]
    pub pooled_fallback: bool,
    /// Config file path (TOML); `AISTRACK_CONFIG` is honored too.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: CommonOverrides,
}

#[derive(Debug, Serialize)]
struct CalibrateSummary {
    counts: StageCounts,
    gate_p: f64,
    gate_value_seconds: f64,
    training_window: String,
    table: PathBuf,
}

pub fn run(args: &CalibrateArgs) -> anyhow::Result<()> {
    let file_config = FileConfig::load(args.config.as_deref())?;
    let resolved = resolve(&args.overrides, &file_config, None, args.gate_p)?;
    init_jobs(resolved.jobs);

    let prepared = prepare(&args.decoded, Some(&args.static_dir), &resolved)?;
    let opts = CalibrateOptions {
        gate_p: resolved.gate_p,
        pooled_fallback: args.pooled_fallback,
        training_window: window_label(&day_files(&args.decoded)?),
    };
    let table = calibrate(&prepared.streams, &prepared.statics, LengthBins::standard(), &opts)?;
    table.save(&args.out)?;

    emit_summary(&CalibrateSummary {
        counts: prepared.counts,
        gate_p: table.gate_p,
        gate_value_seconds: table.gate_value_seconds,
        training_window: table.training_window.clone(),
        table: args.out.clone(),
    })
}
