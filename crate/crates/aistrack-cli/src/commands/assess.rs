//! `aistrack assess`: spatial assessment of an extracted trajectory file.

use std::io::Write;
use std::path::PathBuf;

use anyhow::Context;
use serde::Serialize;

use aistrack::assess::{
    assess_trajectory, inspect, pixel_map, ship_type_hull_average, PixelMapConfig, Recipe, Rule,
};
use aistrack::export::{
    density_grid, read_trajectories_csv, write_density_grid, write_pixel_map,
};
use aistrack::ingest;

use crate::config::{resolve, CommonOverrides, FileConfig};
use crate::pipeline::{day_files, emit_summary, init_jobs};

#[derive(Debug, clap::Args)]
pub struct AssessArgs {
    /// Trajectory CSV produced by `extract`.
    #[arg(long)]
    pub input: PathBuf,
    /// Directory of decoded static day files (for ship types).
    #[arg(long = "static")]
    pub static_dir: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Reject trajectories with fewer messages than this.
    #[arg(long)]
    pub min_msgs: Option<usize>,
    /// Reject trajectories whose hull area (m²) is below this.
    #[arg(long)]
    pub min_hull_area: Option<f64>,
    /// Also write a density grid with this many pixels per axis.
    #[arg(long)]
    pub heatmap: Option<usize>,
    /// Config file path (TOML); `AISTRACK_CONFIG` is honored too.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: CommonOverrides,
}

#[derive(Debug, Serialize)]
struct AssessSummary {
    trajectories_in: u64,
    accepted: u64,
    rejected: u64,
    rules: Vec<String>,
    reports: PathBuf,
    pixel_map: PathBuf,
    ship_type_averages: PathBuf,
    density_grid: Option<PathBuf>,
}

pub fn run(args: &AssessArgs) -> anyhow::Result<()> {
    let file_config = FileConfig::load(args.config.as_deref())?;
    let resolved = resolve(&args.overrides, &file_config, None, None)?;
    init_jobs(resolved.jobs);

    let file = std::fs::File::open(&args.input)
        .with_context(|| format!("cannot read {}", args.input.display()))?;
    let mut ships = read_trajectories_csv(std::io::BufReader::new(file))?;

    if let Some(static_dir) = &args.static_dir {
        let outcome = ingest::read_day_files(&[], &day_files(static_dir)?)?;
        let statics = ingest::collect_statics(&outcome.statics);
        for (mmsi, ship) in ships.iter_mut() {
            ship.static_info = statics.get(mmsi).copied();
        }
    }

    let mut rules = Vec::new();
    if let Some(n) = args.min_msgs {
        rules.push(Rule::too_few_obs(n));
    }
    if let Some(area) = args.min_hull_area {
        rules.push(Rule::convex_hull_area(area));
    }
    let rule_names: Vec<String> = rules.iter().map(|r| r.name.clone()).collect();
    let recipe = Recipe::new(rules);

    let trajectories_in: u64 =
        ships.values().map(|s| s.trajectories.len() as u64).sum();
    let (accepted, rejected) = inspect(&ships, &recipe);
    let accepted_count: u64 = accepted.values().map(|s| s.trajectories.len() as u64).sum();
    let rejected_count: u64 = rejected.values().map(|s| s.trajectories.len() as u64).sum();

    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("cannot create {}", args.out.display()))?;

    // Per-trajectory reports for the accepted set.
    let reports_path = args.out.join("reports.csv");
    let mut w = std::io::BufWriter::new(std::fs::File::create(&reports_path)?);
    writeln!(w, "mmsi,traj_id,n_msg,hull_area_m2,avg_complexity,avg_abs_course_change_deg")?;
    for ship in accepted.values() {
        for (traj_id, traj) in ship.trajectories.iter().enumerate() {
            let report = assess_trajectory(traj)?;
            let complexity = report
                .avg_complexity
                .map(|c| format!("{c:.9}"))
                .unwrap_or_default();
            let delta = report
                .avg_abs_course_change_deg
                .map(|d| format!("{d:.6}"))
                .unwrap_or_default();
            writeln!(
                w,
                "{},{},{},{:.3},{},{}",
                ship.mmsi, traj_id, report.n_msg, report.hull_area_m2, complexity, delta
            )?;
        }
    }
    drop(w);

    // Pixel map of course change by (message count, hull area).
    let map = pixel_map(
        accepted.values().flat_map(|s| s.trajectories.iter()),
        PixelMapConfig::default(),
    )?;
    let pixel_csv = args.out.join("pixel_map.csv");
    write_pixel_map(&map, &pixel_csv, &args.out.join("pixel_map.json"))?;

    // Ship-type hull averages.
    let averages = ship_type_hull_average(&accepted)?;
    let averages_path = args.out.join("ship_type_hull_avg.csv");
    let mut w = std::io::BufWriter::new(std::fs::File::create(&averages_path)?);
    writeln!(w, "ship_type,mean_hull_area_m2")?;
    for (category, mean) in &averages {
        writeln!(w, "{category},{mean:.3}")?;
    }
    drop(w);

    // Optional density grid.
    let density_path = match args.heatmap {
        Some(npixels) => {
            anyhow::ensure!(npixels >= 1, "--heatmap needs at least one pixel");
            let grid = density_grid(&accepted, &resolved.bounds, npixels);
            let path = args.out.join("density_grid.csv");
            write_density_grid(&grid, &path, &args.out.join("density_grid.json"))?;
            Some(path)
        }
        None => None,
    };

    emit_summary(&AssessSummary {
        trajectories_in,
        accepted: accepted_count,
        rejected: rejected_count,
        rules: rule_names,
        reports: reports_path,
        pixel_map: pixel_csv,
        ship_type_averages: averages_path,
        density_grid: density_path,
    })
}
