//! Length-binned empirical quantile calibration of the five split metrics.
//!
//! Thresholds for splitting are not hand-picked: they are tail quantiles of
//! the metric distributions observed in a training corpus, binned by ship
//! length as a maneuverability proxy. Time gaps behave the same across all
//! ship sizes, so the time-gap distribution is pooled instead of binned, and
//! its 95th percentile gates which pairs contribute to the other four
//! distributions (pairs further apart in time carry little information about
//! instantaneous behavior).
//!
//! Distributions are held in mergeable rank-error sketches so calibration
//! shards (one per day file) can run in parallel and be reduced; a finished
//! table exposes quantiles through a fixed probability grid with linear
//! interpolation between grid points.

mod sketch;

pub use sketch::{QuantileSketch, DEFAULT_EPSILON};

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decode::VesselStatic;
use crate::ingest::MessageStream;
use crate::metrics::pair_metrics;

/// Current table file schema version.
pub const TABLE_SCHEMA_VERSION: u32 = 1;

/// Probability step of the stored quantile grid: p ∈ {0.005, 0.010, …, 0.995}.
pub const GRID_STEP: f64 = 0.005;
/// Number of grid points.
pub const GRID_POINTS: usize = 199;

/// Default probability for the temporal gate.
pub const DEFAULT_GATE_P: f64 = 0.95;

#[derive(Debug, Error)]
pub enum QuantileError {
    #[error("alpha {0} outside (0, 1)")]
    AlphaOutOfRange(f64),
    #[error("no calibration samples for metric {0:?} in any usable bin")]
    EmptyBin(Metric),
    #[error("no vessel in the corpus has static data; enable the pooled fallback to calibrate anyway")]
    NoStaticData,
    #[error("table file has schema version {found}, expected {expected}")]
    SchemaVersionMismatch { found: u32, expected: u32 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("table file is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("cannot merge tables with different bin edges or gate settings")]
    IncompatibleTables,
}

/// The five split metrics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// Absolute change in reported speed, knots.
    DsogAbs,
    /// Turning rate, degrees per second (two-sided).
    Rot,
    /// Time gap, seconds (pooled across bins).
    Dt,
    /// Distance between consecutive messages, nautical miles.
    Dist,
    /// Reported minus position-derived speed, knots (two-sided).
    SpeedGap,
}

/// Ship-length bin edges in meters. The last bin is open-ended.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LengthBins {
    /// Finite left edges; bin `i` covers `[edges[i], edges[i+1])` and the
    /// last bin covers `[edges.last(), ∞)`.
    pub edges: Vec<f64>,
}

impl Default for LengthBins {
    fn default() -> Self {
        Self::standard()
    }
}

impl LengthBins {
    /// The nine standard bins: [0,25), [25,50), …, [200,∞).
    pub fn standard() -> Self {
        Self { edges: vec![0.0, 25.0, 50.0, 75.0, 100.0, 125.0, 150.0, 175.0, 200.0] }
    }

    pub fn count(&self) -> usize {
        self.edges.len()
    }

    /// Bin index for a ship length in meters.
    pub fn index_of(&self, length_m: f64) -> usize {
self.edges.iter().rposition(|&e| length_m >= e).unwrap_or_default()
    }
}

/// One metric/bin cell: sample count, the stored sketch, and the quantile
/// grid snapshotted from it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinTable {
    pub count: u64,
    pub grid: Vec<f64>,
    pub sketch: QuantileSketch,
}

impl BinTable {
    fn new() -> Self {
        Self { count: 0, grid: Vec::new(), sketch: QuantileSketch::default() }
    }

    fn insert(&mut self, v: f64) {
        self.sketch.insert(v);
        self.count += 1;
    }

    fn merge(&mut self, other: &BinTable) {
        self.sketch.merge(&other.sketch);
        self.count += other.count;
    }

    fn snapshot_grid(&mut self) {
        let ps: Vec<f64> = (1..=GRID_POINTS).map(|i| i as f64 * GRID_STEP).collect();
        self.grid = self.sketch.quantiles(&ps).unwrap_or_default();
    }

    /// Linear interpolation on the stored grid; clamps outside [0.005, 0.995].
    fn quantile(&self, p: f64) -> Option<f64> {
        if self.grid.is_empty() {
            return None;
        }
        let pos = (p / GRID_STEP) - 1.0;
        if pos <= 0.0 {
            return Some(self.grid[0]);
        }
        let last = (self.grid.len() - 1) as f64;
        if pos >= last {
            return Some(self.grid[self.grid.len() - 1]);
        }
        let lo = pos.floor() as usize;
        let frac = pos - pos.floor();
        Some(self.grid[lo] + (self.grid[lo + 1] - self.grid[lo]) * frac)
    }
}

/// Per-metric storage: one cell per length bin plus a pooled cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricTable {
    pub bins: Vec<BinTable>,
    pub pooled: BinTable,
}

impl MetricTable {
    fn new(bin_count: usize) -> Self {
        Self { bins: (0..bin_count).map(|_| BinTable::new()).collect(), pooled: BinTable::new() }
    }
}

/// The calibrated quantile functions for all five metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileTable {
    pub version: u32,
    pub bins: LengthBins,
    pub gate_p: f64,
    pub gate_value_seconds: f64,
    pub training_window: String,
    pub metrics: BTreeMap<Metric, MetricTable>,
}

/// Thresholds extracted from a table for one vessel and one tail probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SplitThresholds {
    /// Speed-change cutoff in knots (one-sided).
    pub speed_change: f64,
    /// Admissible turning-rate interval in degrees per second.
    pub turn_rate: (f64, f64),
    /// Time-gap cutoff in seconds.
    pub time_gap: f64,
    /// Distance cutoff in nautical miles.
    pub distance: f64,
    /// Admissible reported-vs-positional speed-gap interval in knots.
    pub speed_gap: (f64, f64),
    pub alpha: f64,
}

/// Calibration settings.
#[derive(Debug, Clone)]
pub struct CalibrateOptions {
    /// Probability of the temporal gate quantile.
    pub gate_p: f64,
    /// Calibrate even when no vessel has static data; lookups then rely on
    /// the pooled tables.
    pub pooled_fallback: bool,
    /// Free-form label recorded in the table (e.g. the covered date range).
    pub training_window: String,
}

impl Default for CalibrateOptions {
    fn default() -> Self {
        Self {
            gate_p: DEFAULT_GATE_P,
            pooled_fallback: false,
            training_window: "unspecified".to_string(),
        }
    }
}

struct Shard {
    dt: BinTable,
    dsog_abs: MetricTable,
    rot: MetricTable,
    dist: MetricTable,
    speed_gap: MetricTable,
}

impl Shard {
    fn new(bin_count: usize) -> Self {
        Self {
            dt: BinTable::new(),
            dsog_abs: MetricTable::new(bin_count),
            rot: MetricTable::new(bin_count),
            dist: MetricTable::new(bin_count),
            speed_gap: MetricTable::new(bin_count),
        }
    }

    fn merge(&mut self, other: &Shard) {
        self.dt.merge(&other.dt);
        for (mine, theirs) in [
            (&mut self.dsog_abs, &other.dsog_abs),
            (&mut self.rot, &other.rot),
            (&mut self.dist, &other.dist),
            (&mut self.speed_gap, &other.speed_gap),
        ] {
            for (m, t) in mine.bins.iter_mut().zip(&theirs.bins) {
                m.merge(t);
            }
            mine.pooled.merge(&theirs.pooled);
        }
    }
}

fn dt_shard(stream: &MessageStream) -> BinTable {
    let mut table = BinTable::new();
    for pair in stream.messages.windows(2) {
        table.insert(pair[1].recv_time - pair[0].recv_time);
    }
    table
}

fn metric_shard(
    stream: &MessageStream,
    bin: Option<usize>,
    gate_seconds: f64,
    shard: &mut Shard,
) {
    for pair in stream.messages.windows(2) {
        let pm = match pair_metrics(&pair[0], &pair[1]) {
            Ok(pm) => pm,
            // Zero gaps and incomplete kinematics are split candidates, not
            // calibration samples.
            Err(_) => continue,
        };
        if pm.dt > gate_seconds {
            continue;
        }
        for (table, value) in [
            (&mut shard.dsog_abs, pm.dsog.abs()),
            (&mut shard.rot, pm.rot),
            (&mut shard.dist, pm.dist),
            (&mut shard.speed_gap, pm.speed_gap),
        ] {
            if let Some(b) = bin {
                table.bins[b].insert(value);
            }
            table.pooled.insert(value);
        }
    }
}

fn length_bin_of(
    statics: &BTreeMap<u32, VesselStatic>,
    bins: &LengthBins,
    mmsi: u32,
) -> Option<usize> {
    statics
        .get(&mmsi)
        .and_then(|s| s.ship_length)
        .map(|len| bins.index_of(len))
}

fn finalize(
    mut shard: Shard,
    bins: LengthBins,
    gate_p: f64,
    gate_value: f64,
    training_window: String,
) -> QuantileTable {
    let mut metrics = BTreeMap::new();
    shard.dt.snapshot_grid();
    metrics.insert(
        Metric::Dt,
        MetricTable { bins: Vec::new(), pooled: shard.dt },
    );
    for (metric, mut table) in [
        (Metric::DsogAbs, shard.dsog_abs),
        (Metric::Rot, shard.rot),
        (Metric::Dist, shard.dist),
        (Metric::SpeedGap, shard.speed_gap),
    ] {
        for bin in &mut table.bins {
            bin.snapshot_grid();
        }
        table.pooled.snapshot_grid();
        metrics.insert(metric, table);
    }
    QuantileTable {
        version: TABLE_SCHEMA_VERSION,
        bins,
        gate_p,
        gate_value_seconds: gate_value,
        training_window,
        metrics,
    }
}

/// Calibrates a table from filtered, deduplicated streams.
///
/// Two phases: the pooled time-gap distribution is built first (ungated and
/// unbinned) and its `gate_p` quantile becomes the temporal gate; then every
/// consecutive pair at or below the gate contributes its other four metrics
/// to the length bin of its vessel. Vessels without a known length
/// contribute to the pooled cells only.
pub fn calibrate(
    streams: &[MessageStream],
    statics: &BTreeMap<u32, VesselStatic>,
    bins: LengthBins,
    opts: &CalibrateOptions,
) -> Result<QuantileTable, QuantileError> {
    if !opts.pooled_fallback {
        let any_known = streams
            .iter()
            .any(|s| length_bin_of(statics, &bins, s.mmsi).is_some());
        if !any_known {
            return Err(QuantileError::NoStaticData);
        }
    }

    let dt_shards: Vec<BinTable> = streams.par_iter().map(dt_shard).collect();
    let mut dt = BinTable::new();
    for shard in &dt_shards {
        dt.merge(shard);
    }
    let gate = dt.sketch.quantile(opts.gate_p).unwrap_or(f64::INFINITY);

    let mut table = calibrate_with_gate(streams, statics, bins, gate, opts);
    // Phase one owns the full (ungated) time-gap distribution.
    table.metrics.get_mut(&Metric::Dt).unwrap().pooled = {
        let mut cell = dt;
        cell.snapshot_grid();
        cell
    };
    Ok(table)
}

/// Calibrates one shard against a known temporal gate. Sharded runs compute
/// the gate once (phase one over everything), build per-day shards with this
/// function, and reduce them with [`QuantileTable::merge`].
pub fn calibrate_with_gate(
    streams: &[MessageStream],
    statics: &BTreeMap<u32, VesselStatic>,
    bins: LengthBins,
    gate_seconds: f64,
    opts: &CalibrateOptions,
) -> QuantileTable {
    let bin_count = bins.count();
    let shards: Vec<Shard> = streams
        .par_iter()
        .map(|stream| {
            let mut shard = Shard::new(bin_count);
            shard.dt.merge(&dt_shard(stream));
            let bin = length_bin_of(statics, &bins, stream.mmsi);
            metric_shard(stream, bin, gate_seconds, &mut shard);
            shard
        })
        .collect();
    let mut combined = Shard::new(bin_count);
    for shard in &shards {
        combined.merge(shard);
    }
    finalize(combined, bins, opts.gate_p, gate_seconds, opts.training_window.clone())
}

impl QuantileTable {
    /// Quantile of `metric` at probability `p` for a vessel of the given
    /// length. Empty bins fall back to the nearest non-empty bin toward
    /// larger lengths (their thresholds are tighter, hence more
    /// conservative), then toward smaller lengths, then to the pooled cell.
    /// Unknown lengths use the pooled cell directly.
    pub fn quantile(
        &self,
        metric: Metric,
        ship_length: Option<f64>,
        p: f64,
    ) -> Result<f64, QuantileError> {
        let table = self.metrics.get(&metric).ok_or(QuantileError::EmptyBin(metric))?;
        if metric == Metric::Dt || ship_length.is_none() || table.bins.is_empty() {
            return table.pooled.quantile(p).ok_or(QuantileError::EmptyBin(metric));
        }
        let start = self.bins.index_of(ship_length.unwrap());
        let larger = start..table.bins.len();
        let smaller = (0..start).rev();
        for i in larger.chain(smaller) {
            if let Some(v) = table.bins[i].quantile(p) {
                return Ok(v);
            }
        }
        table.pooled.quantile(p).ok_or(QuantileError::EmptyBin(metric))
    }

    /// Extracts split thresholds for one vessel at tail probability `alpha`.
    pub fn thresholds(
        &self,
        ship_length: Option<f64>,
        alpha: f64,
    ) -> Result<SplitThresholds, QuantileError> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(QuantileError::AlphaOutOfRange(alpha));
        }
        Ok(SplitThresholds {
            speed_change: self.quantile(Metric::DsogAbs, ship_length, 1.0 - alpha)?,
            turn_rate: (
                self.quantile(Metric::Rot, ship_length, alpha / 2.0)?,
                self.quantile(Metric::Rot, ship_length, 1.0 - alpha / 2.0)?,
            ),
            time_gap: self.quantile(Metric::Dt, None, 1.0 - alpha)?,
            distance: self.quantile(Metric::Dist, ship_length, 1.0 - alpha)?,
            speed_gap: (
                self.quantile(Metric::SpeedGap, ship_length, alpha / 2.0)?,
                self.quantile(Metric::SpeedGap, ship_length, 1.0 - alpha / 2.0)?,
            ),
            alpha,
        })
    }

    /// Merges a calibration shard built against the same bins and gate.
    pub fn merge(&mut self, other: &QuantileTable) -> Result<(), QuantileError> {
        if self.bins != other.bins
            || self.gate_p != other.gate_p
            || self.gate_value_seconds != other.gate_value_seconds
        {
            return Err(QuantileError::IncompatibleTables);
        }
        for (metric, mine) in self.metrics.iter_mut() {
            let theirs = other.metrics.get(metric).ok_or(QuantileError::IncompatibleTables)?;
            if mine.bins.len() != theirs.bins.len() {
                return Err(QuantileError::IncompatibleTables);
            }
            for (m, t) in mine.bins.iter_mut().zip(&theirs.bins) {
                m.merge(t);
                m.snapshot_grid();
            }
            mine.pooled.merge(&theirs.pooled);
            mine.pooled.snapshot_grid();
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<(), QuantileError> {
        let file = std::fs::File::create(path)?;
        serde_json::to_writer_pretty(std::io::BufWriter::new(file), self)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, QuantileError> {
        #[derive(Deserialize)]
        struct VersionProbe {
            version: u32,
        }
        let text = std::fs::read_to_string(path)?;
        let probe: VersionProbe = serde_json::from_str(&text)?;
        if probe.version != TABLE_SCHEMA_VERSION {
            return Err(QuantileError::SchemaVersionMismatch {
                found: probe.version,
                expected: TABLE_SCHEMA_VERSION,
            });
        }
        Ok(serde_json::from_str(&text)?)
    }
}
