//! Serialization of trajectories, density grids, and assessment reports.
//!
//! Coordinates are written with seven decimal places (about a centimeter),
//! comfortably above the precision of the transport. Everything written here
//! is deterministic for identical inputs: map iteration orders are fixed,
//! and floats use either fixed precision or the shortest round-trip form.

use std::collections::BTreeMap;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use crate::assess::PixelMap;
use crate::decode::AisMessage;
use crate::geo::BoundingBox;
use crate::splitter::{TargetShip, Trajectory};

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Json(#[from] serde_json::Error),
    #[error("trajectory file malformed at line {line}: {reason}")]
    MalformedTrajectoryFile { line: usize, reason: String },
}

/// Output format for trajectory files.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrajectoryFormat {
    Csv,
    GeoJson,
}

const TRAJECTORY_HEADER: &str = "mmsi,traj_id,seq,timestamp,lat,lon,sog,cog";

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes one CSV row per message: `mmsi,traj_id,seq,timestamp,lat,lon,sog,cog`.
pub fn write_trajectories_csv<W: Write>(
    ships: &BTreeMap<u32, TargetShip>,
    mut w: W,
) -> Result<(), ExportError> {
    writeln!(w, "{TRAJECTORY_HEADER}")?;
    for ship in ships.values() {
        for (traj_id, traj) in ship.trajectories.iter().enumerate() {
            for (seq, msg) in traj.messages.iter().enumerate() {
                let (lat, lon) = match msg.position() {
                    Some((lat, lon)) => (format!("{lat:.7}"), format!("{lon:.7}")),
                    None => (String::new(), String::new()),
                };
                writeln!(
                    w,
                    "{},{},{},{},{},{},{},{}",
                    ship.mmsi,
                    traj_id,
                    seq,
                    msg.recv_time,
                    lat,
                    lon,
                    fmt_opt(msg.sog),
                    fmt_opt(msg.cog),
                )?;
            }
        }
    }
    Ok(())
}

/// Reads a trajectory CSV back into per-ship trajectories. Only the
/// serialized fields round-trip; message type and originator are not part of
/// the trajectory schema.
pub fn read_trajectories_csv<R: std::io::BufRead>(
    r: R,
) -> Result<BTreeMap<u32, TargetShip>, ExportError> {
    let mut ships: BTreeMap<u32, TargetShip> = BTreeMap::new();
    let mut lines = r.lines().enumerate();
    match lines.next() {
        Some((_, Ok(header))) if header.trim() == TRAJECTORY_HEADER => {}
        Some((line, _)) => {
            return Err(ExportError::MalformedTrajectoryFile {
                line: line + 1,
                reason: "unexpected header".to_string(),
            })
        }
        None => return Ok(ships),
    }
    for (idx, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 8 {
            return Err(ExportError::MalformedTrajectoryFile {
                line: idx + 1,
                reason: format!("expected 8 fields, got {}", fields.len()),
            });
        }
        let parse_f64 = |text: &str, what: &str| -> Result<f64, ExportError> {
            text.parse().map_err(|_| ExportError::MalformedTrajectoryFile {
                line: idx + 1,
                reason: format!("bad {what}: {text:?}"),
            })
        };
        let parse_opt = |text: &str, what: &str| -> Result<Option<f64>, ExportError> {
            if text.is_empty() {
                Ok(None)
            } else {
                parse_f64(text, what).map(Some)
            }
        };
        let mmsi: u32 = fields[0].parse().map_err(|_| ExportError::MalformedTrajectoryFile {
            line: idx + 1,
            reason: format!("bad mmsi: {:?}", fields[0]),
        })?;
        let traj_id: usize = fields[1].parse().map_err(|_| {
            ExportError::MalformedTrajectoryFile {
                line: idx + 1,
                reason: format!("bad traj_id: {:?}", fields[1]),
            }
        })?;
        let msg = AisMessage {
            recv_time: parse_f64(fields[3], "timestamp")?,
            mmsi,
            msg_type: 0,
            lat: parse_opt(fields[4], "lat")?,
            lon: parse_opt(fields[5], "lon")?,
            sog: parse_opt(fields[6], "sog")?,
            cog: parse_opt(fields[7], "cog")?,
            originator: None,
        };
        let ship = ships.entry(mmsi).or_insert_with(|| TargetShip {
            mmsi,
            static_info: None,
            trajectories: Vec::new(),
        });
        while ship.trajectories.len() <= traj_id {
            let start = ship.trajectories.last().map(|t: &Trajectory| t.source_span.1).unwrap_or(0);
            ship.trajectories.push(Trajectory {
                mmsi,
                messages: Vec::new(),
                source_span: (start, start),
            });
        }
        let traj = &mut ship.trajectories[traj_id];
        traj.messages.push(msg);
        traj.source_span.1 += 1;
    }
    Ok(ships)
}

#[derive(Serialize)]
struct GeoJsonFeature {
    #[serde(rename = "type")]
    kind: &'static str,
    geometry: serde_json::Value,
    properties: serde_json::Value,
}

/// Writes a GeoJSON FeatureCollection of LineStrings, one per trajectory,
/// with coordinates in `[lon, lat]` order.
pub fn write_trajectories_geojson<W: Write>(
    ships: &BTreeMap<u32, TargetShip>,
    mut w: W,
) -> Result<(), ExportError> {
    let mut features = Vec::new();
    for ship in ships.values() {
        for (traj_id, traj) in ship.trajectories.iter().enumerate() {
            let coordinates: Vec<serde_json::Value> = traj
                .messages
                .iter()
                .filter_map(|m| m.position())
                .map(|(lat, lon)| {
                    serde_json::json!([
                        format!("{lon:.7}").parse::<f64>().unwrap(),
                        format!("{lat:.7}").parse::<f64>().unwrap()
                    ])
                })
                .collect();
            features.push(GeoJsonFeature {
                kind: "Feature",
                geometry: serde_json::json!({
                    "type": "LineString",
                    "coordinates": coordinates,
                }),
                properties: serde_json::json!({
                    "mmsi": ship.mmsi,
                    "traj_id": traj_id,
                    "n_msg": traj.messages.len(),
                    "ship_type": ship.static_info.and_then(|s| s.ship_type),
                    "length": ship.static_info.and_then(|s| s.ship_length),
                }),
            });
        }
    }
    let collection = serde_json::json!({
        "type": "FeatureCollection",
        "features": features,
    });
    serde_json::to_writer(&mut w, &collection)?;
    writeln!(w)?;
    Ok(())
}

/// Writes trajectories to `path` in the chosen format.
pub fn write_trajectories(
    ships: &BTreeMap<u32, TargetShip>,
    path: &Path,
    format: TrajectoryFormat,
) -> Result<(), ExportError> {
    let file = BufWriter::new(std::fs::File::create(path)?);
    match format {
        TrajectoryFormat::Csv => write_trajectories_csv(ships, file),
        TrajectoryFormat::GeoJson => write_trajectories_geojson(ships, file),
    }
}

/// Message-count grid over a bounding box.
#[derive(Debug, Clone, Serialize)]
pub struct DensityGrid {
    pub bb: BoundingBox,
    pub npixels: usize,
    /// Row-major counts, row 0 at the latitude minimum.
    pub counts: Vec<u64>,
}

impl DensityGrid {
    pub fn count_at(&self, row: usize, col: usize) -> u64 {
        self.counts[row * self.npixels + col]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Counts every available in-bounds position into an `npixels × npixels`
/// grid. Cells are half-open with the top edges closed, so positions exactly
/// on the maximum edge land in the last cell.
pub fn density_grid(ships: &BTreeMap<u32, TargetShip>, bb: &BoundingBox, npixels: usize) -> DensityGrid {
    assert!(npixels >= 1);
    let mut counts = vec![0u64; npixels * npixels];
    let lat_span = bb.lat_max - bb.lat_min;
    let lon_span = bb.lon_max - bb.lon_min;
    for ship in ships.values() {
        for traj in &ship.trajectories {
            for msg in &traj.messages {
                let Some((lat, lon)) = msg.position() else {
                    continue;
                };
                if !bb.contains(lat, lon) {
                    continue;
                }
                let row = (((lat - bb.lat_min) / lat_span * npixels as f64).floor() as usize)
                    .min(npixels - 1);
                let col = (((lon - bb.lon_min) / lon_span * npixels as f64).floor() as usize)
                    .min(npixels - 1);
                counts[row * npixels + col] += 1;
            }
        }
    }
    DensityGrid { bb: *bb, npixels, counts }
}

/// Writes the grid as sparse `row,col,count` CSV (occupied cells only) plus
/// a JSON manifest with the axes.
pub fn write_density_grid(grid: &DensityGrid, csv_path: &Path, manifest_path: &Path) -> Result<(), ExportError> {
    let mut w = BufWriter::new(std::fs::File::create(csv_path)?);
    writeln!(w, "row,col,count")?;
    for row in 0..grid.npixels {
        for col in 0..grid.npixels {
            let count = grid.count_at(row, col);
            if count > 0 {
                writeln!(w, "{row},{col},{count}")?;
            }
        }
    }
    let manifest = serde_json::json!({
        "bb": grid.bb,
        "npixels": grid.npixels,
        "total": grid.total(),
    });
    std::fs::write(manifest_path, serde_json::to_string_pretty(&manifest)?)?;
    Ok(())
}

/// Writes a pixel map as `row,col,value` CSV plus a JSON manifest with the
/// axis ranges.
pub fn write_pixel_map(map: &PixelMap, csv_path: &Path, manifest_path: &Path) -> Result<(), ExportError> {
    let mut w = BufWriter::new(std::fs::File::create(csv_path)?);
    writeln!(w, "row,col,value")?;
    for ((row, col), value) in &map.cells {
        writeln!(w, "{row},{col},{value:.6}")?;
    }
    let manifest = serde_json::json!({
        "rows": map.config.rows,
        "cols": map.config.cols,
        "n_msg_max": map.config.n_msg_max,
        "area_max_m2": map.config.area_max_m2,
    });
    std::fs::write(manifest_path, serde_json::to_string_pretty(&manifest)?)?;
    Ok(())
}
