//! Layered configuration: flags override the config file, the config file
//! overrides built-in defaults.
//!
//! The config file is TOML key/value; its path comes from `--config` or the
//! `AISTRACK_CONFIG` environment variable.

use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Deserialize;

use aistrack::geo::BoundingBox;

/// Built-in defaults: the North/Baltic Sea study box, the [1, 30] kn speed
/// window, alpha 0.05, and a 0.95 temporal gate.
pub const DEFAULT_LAT_MIN: f64 = 51.85;
pub const DEFAULT_LAT_MAX: f64 = 60.49;
pub const DEFAULT_LON_MIN: f64 = 4.85;
pub const DEFAULT_LON_MAX: f64 = 14.3;
pub const DEFAULT_SOG_MIN: f64 = 1.0;
pub const DEFAULT_SOG_MAX: f64 = 30.0;
pub const DEFAULT_ALPHA: f64 = 0.05;
pub const DEFAULT_GATE_P: f64 = 0.95;

pub const CONFIG_ENV_VAR: &str = "AISTRACK_CONFIG";

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub lat_min: Option<f64>,
    pub lat_max: Option<f64>,
    pub lon_min: Option<f64>,
    pub lon_max: Option<f64>,
    pub sog_min: Option<f64>,
    pub sog_max: Option<f64>,
    pub alpha: Option<f64>,
    pub gate_p: Option<f64>,
    pub jobs: Option<usize>,
}

impl FileConfig {
    pub fn load(explicit: Option<&Path>) -> anyhow::Result<Self> {
        let path: Option<PathBuf> = match explicit {
            Some(p) => Some(p.to_path_buf()),
            None => std::env::var_os(CONFIG_ENV_VAR).map(PathBuf::from),
        };
        match path {
            Some(path) => {
                let text = std::fs::read_to_string(&path)
                    .with_context(|| format!("cannot read config file {}", path.display()))?;
                toml::from_str(&text)
                    .with_context(|| format!("invalid config file {}", path.display()))
            }
            None => Ok(Self::default()),
        }
    }
}

/// Fully resolved settings shared by the pipeline commands.
#[derive(Debug, Clone, Copy)]
pub struct Resolved {
    pub bounds: BoundingBox,
    pub sog_min: f64,
    pub sog_max: f64,
    pub alpha: f64,
    pub gate_p: f64,
    pub jobs: usize,
}

/// Flag-level overrides shared by the pipeline commands.
#[derive(Debug, Clone, Copy, Default, clap::Args)]
pub struct CommonOverrides {
    /// Lower latitude bound in degrees.
    #[arg(long, global = true)]
    pub lat_min: Option<f64>,
    /// Upper latitude bound in degrees.
    #[arg(long, global = true)]
    pub lat_max: Option<f64>,
    /// Lower longitude bound in degrees.
    #[arg(long, global = true)]
    pub lon_min: Option<f64>,
    /// Upper longitude bound in degrees.
    #[arg(long, global = true)]
    pub lon_max: Option<f64>,
    /// Lower speed bound in knots.
    #[arg(long, global = true)]
    pub sog_min: Option<f64>,
    /// Upper speed bound in knots.
    #[arg(long, global = true)]
    pub sog_max: Option<f64>,
    /// Worker threads (defaults to the hardware thread count).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
}

pub fn resolve(
    overrides: &CommonOverrides,
    file: &FileConfig,
    alpha_flag: Option<f64>,
    gate_p_flag: Option<f64>,
) -> anyhow::Result<Resolved> {
    let pick = |flag: Option<f64>, file_value: Option<f64>, default: f64| {
        flag.or(file_value).unwrap_or(default)
    };
    let bounds = BoundingBox::new(
        pick(overrides.lat_min, file.lat_min, DEFAULT_LAT_MIN),
        pick(overrides.lat_max, file.lat_max, DEFAULT_LAT_MAX),
        pick(overrides.lon_min, file.lon_min, DEFAULT_LON_MIN),
        pick(overrides.lon_max, file.lon_max, DEFAULT_LON_MAX),
    )?;
    let jobs = overrides
        .jobs
        .or(file.jobs)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1));
    Ok(Resolved {
        bounds,
        sog_min: pick(overrides.sog_min, file.sog_min, DEFAULT_SOG_MIN),
        sog_max: pick(overrides.sog_max, file.sog_max, DEFAULT_SOG_MAX),
        alpha: pick(alpha_flag, file.alpha, DEFAULT_ALPHA),
        gate_p: pick(gate_p_flag, file.gate_p, DEFAULT_GATE_P),
        jobs,
    })
}
