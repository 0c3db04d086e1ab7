//! Post-split spatial assessment: convex hull area, trajectory complexity,
//! average absolute course change, rule recipes, and aggregates.
//!
//! The three per-trajectory quantities answer "long, clean, uninterrupted":
//! the message count measures length, the convex hull area measures spatial
//! extent, and the average absolute course change measures cleanliness as an
//! angle in degrees: 0° for a perfectly straight track, 180° for pure
//! out-and-back motion.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::geo::{to_utm_zoned, utm_zone, GeoError};
use crate::splitter::{TargetShip, Trajectory};

#[derive(Debug, Error, PartialEq)]
pub enum AssessError {
    #[error("trajectory needs at least {needed} messages, has {got}")]
    TooFewMessages { needed: usize, got: usize },
    #[error("all segment vectors are zero; the trajectory never moves")]
    DegenerateTrajectory,
    #[error(transparent)]
    Geo(#[from] GeoError),
}

/// Which plane the complexity vectors live in.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum ComplexitySpace {
    /// Raw latitude/longitude degree differences.
    #[default]
    LatLonDegrees,
    /// Projected eastings/northings in meters. Removes the latitude-dependent
    /// anisotropy of degree space.
    Projected,
}

/// Spatial summary of one trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AssessmentReport {
    pub n_msg: usize,
    /// Convex hull area of the projected positions in square meters.
    pub hull_area_m2: f64,
    /// Mean cosine of the turn angle over message triples, in [-1, 1].
    /// Undefined below three messages or when the track never moves.
    pub avg_complexity: Option<f64>,
    /// Average absolute course change in degrees, derived from the mean
    /// cosine. Undefined whenever the complexity is.
    pub avg_abs_course_change_deg: Option<f64>,
}

/// Converts a mean turn-angle cosine into degrees.
pub fn course_change_from_complexity(c: f64) -> f64 {
    c.clamp(-1.0, 1.0).acos() / std::f64::consts::PI * 180.0
}

// ---------------------------------------------------------------------------
// Convex hull (quickhull) and polygon area

fn cross(o: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

fn farthest_from_line(points: &[(f64, f64)], a: (f64, f64), b: (f64, f64)) -> Option<usize> {
    let mut best = None;
    let mut best_dist = 0.0;
    for (i, &p) in points.iter().enumerate() {
        let d = cross(a, b, p);
        if d > best_dist {
            best_dist = d;
            best = Some(i);
        }
    }
    best
}

fn hull_side(points: Vec<(f64, f64)>, a: (f64, f64), b: (f64, f64), out: &mut Vec<(f64, f64)>) {
    let Some(far_idx) = farthest_from_line(&points, a, b) else {
        return;
    };
    let far = points[far_idx];
    let left: Vec<(f64, f64)> = points.iter().copied().filter(|&p| cross(a, far, p) > 0.0).collect();
    let right: Vec<(f64, f64)> = points.iter().copied().filter(|&p| cross(far, b, p) > 0.0).collect();
    hull_side(left, a, far, out);
    out.push(far);
    hull_side(right, far, b, out);
}

/// Convex hull vertices in counter-clockwise order (quickhull). Collinear
/// inputs collapse to their two extreme points.
pub fn convex_hull(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    if points.len() < 3 {
        return points.to_vec();
    }
    let mut min = points[0];
    let mut max = points[0];
    for &p in points {
        if (p.0, p.1) < (min.0, min.1) {
            min = p;
        }
        if (p.0, p.1) > (max.0, max.1) {
            max = p;
        }
    }
    if min == max {
        return vec![min]; // all points identical
    }
    let above: Vec<(f64, f64)> = points.iter().copied().filter(|&p| cross(min, max, p) > 0.0).collect();
    let below: Vec<(f64, f64)> = points.iter().copied().filter(|&p| cross(max, min, p) > 0.0).collect();
    let mut hull = vec![min];
    hull_side(above, min, max, &mut hull);
    hull.push(max);
    hull_side(below, max, min, &mut hull);
    hull
}

/// Shoelace area of a simple polygon given in vertex order.
pub fn polygon_area(vertices: &[(f64, f64)]) -> f64 {
    if vertices.len() < 3 {
        return 0.0;
    }
    let mut twice_area = 0.0;
    for i in 0..vertices.len() {
        let (x1, y1) = vertices[i];
        let (x2, y2) = vertices[(i + 1) % vertices.len()];
        twice_area += x1 * y2 - x2 * y1;
    }
    twice_area.abs() / 2.0
}

fn projected_positions(traj: &Trajectory) -> Result<Vec<(f64, f64)>, GeoError> {
    let mut out = Vec::with_capacity(traj.messages.len());
    let mut zone: Option<u8> = None;
    for msg in &traj.messages {
        if let Some((lat, lon)) = msg.position() {
            let z = *zone.get_or_insert_with(|| utm_zone(lon));
            let p = to_utm_zoned(lat, lon, z)?;
            out.push((p.easting, p.northing));
        }
    }
    Ok(out)
}

/// Convex hull area of the trajectory's projected positions, square meters.
/// All positions are projected into the zone of the first point. Fewer than
/// three distinct points, or collinear ones, give zero.
pub fn hull_area(traj: &Trajectory) -> Result<f64, AssessError> {
    let points = projected_positions(traj)?;
    Ok(polygon_area(&convex_hull(&points)))
}

/// Mean cosine of the angle between successive segment vectors.
pub fn avg_complexity(traj: &Trajectory) -> Result<f64, AssessError> {
    avg_complexity_in(traj, ComplexitySpace::LatLonDegrees)
}

pub fn avg_complexity_in(traj: &Trajectory, space: ComplexitySpace) -> Result<f64, AssessError> {
    let raw: Vec<(f64, f64)> = match space {
        ComplexitySpace::LatLonDegrees => traj
            .messages
            .iter()
            .filter_map(|m| m.position())
            .collect(),
        ComplexitySpace::Projected => projected_positions(traj)?,
    };
    if raw.len() < 3 {
        return Err(AssessError::TooFewMessages { needed: 3, got: raw.len() });
    }
    // Collapse repeated positions: they contribute zero-length vectors with
    // no measurable angle.
    let mut positions: Vec<(f64, f64)> = Vec::with_capacity(raw.len());
    for p in raw {
        if positions.last() != Some(&p) {
            positions.push(p);
        }
    }
    if positions.len() < 3 {
        return Err(AssessError::DegenerateTrajectory);
    }
    let mut sum = 0.0;
    for w in positions.windows(3) {
        let p = (w[1].0 - w[0].0, w[1].1 - w[0].1);
        let q = (w[2].0 - w[1].0, w[2].1 - w[1].1);
        let np = (p.0 * p.0 + p.1 * p.1).sqrt();
        let nq = (q.0 * q.0 + q.1 * q.1).sqrt();
        sum += (p.0 * q.0 + p.1 * q.1) / (np * nq);
    }
    Ok(sum / (positions.len() - 2) as f64)
}

/// Average absolute course change in degrees. Needs at least three messages
/// (the smallest trajectory with an interior angle).
pub fn avg_abs_course_change(traj: &Trajectory) -> Result<f64, AssessError> {
    Ok(course_change_from_complexity(avg_complexity(traj)?))
}

/// Computes the full spatial summary for one trajectory.
pub fn assess_trajectory(traj: &Trajectory) -> Result<AssessmentReport, AssessError> {
    let hull = hull_area(traj)?;
    let complexity = match avg_complexity(traj) {
        Ok(c) => Some(c),
        Err(AssessError::TooFewMessages { .. }) | Err(AssessError::DegenerateTrajectory) => None,
        Err(e) => return Err(e),
    };
    Ok(AssessmentReport {
        n_msg: traj.messages.len(),
        hull_area_m2: hull,
        avg_complexity: complexity,
        avg_abs_course_change_deg: complexity.map(course_change_from_complexity),
    })
}

// ---------------------------------------------------------------------------
// Rules and recipes

/// A named rejection predicate: `true` means the trajectory is rejected.
pub struct Rule {
    pub name: String,
    predicate: Box<dyn Fn(&Trajectory) -> bool + Send + Sync>,
}

impl fmt::Debug for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Rule").field("name", &self.name).finish()
    }
}

impl Rule {
    pub fn new<F>(name: impl Into<String>, predicate: F) -> Self
    where
        F: Fn(&Trajectory) -> bool + Send + Sync + 'static,
    {
        Self { name: name.into(), predicate: Box::new(predicate) }
    }

    /// Rejects trajectories with fewer than `n` messages.
    pub fn too_few_obs(n: usize) -> Self {
        Self::new("too_few_obs", move |t: &Trajectory| t.messages.len() < n)
    }

    /// Rejects trajectories whose hull area is below `min_area_m2` (hull
    /// failures also reject).
    pub fn convex_hull_area(min_area_m2: f64) -> Self {
        Self::new("convex_hull_area", move |t: &Trajectory| {
            hull_area(t).map(|a| a < min_area_m2).unwrap_or(true)
        })
    }

    pub fn rejects(&self, traj: &Trajectory) -> bool {
        (self.predicate)(traj)
    }
}

/// An ordered conjunction of rules; any firing rule rejects.
#[derive(Debug, Default)]
pub struct Recipe {
    pub rules: Vec<Rule>,
}

impl Recipe {
    pub fn new(rules: Vec<Rule>) -> Self {
        Self { rules }
    }

    pub fn rejects(&self, traj: &Trajectory) -> bool {
        self.rules.iter().any(|r| r.rejects(traj))
    }
}

/// Partitions every ship's trajectories into accepted and rejected. Ships
/// with nothing on one side are omitted from that side.
pub fn inspect(
    ships: &BTreeMap<u32, TargetShip>,
    recipe: &Recipe,
) -> (BTreeMap<u32, TargetShip>, BTreeMap<u32, TargetShip>) {
    let mut accepted = BTreeMap::new();
    let mut rejected = BTreeMap::new();
    for (mmsi, ship) in ships {
        let (rej, acc): (Vec<Trajectory>, Vec<Trajectory>) =
            ship.trajectories.iter().cloned().partition(|t| recipe.rejects(t));
        if !acc.is_empty() {
            accepted.insert(
                *mmsi,
                TargetShip { mmsi: *mmsi, static_info: ship.static_info, trajectories: acc },
            );
        }
        if !rej.is_empty() {
            rejected.insert(
                *mmsi,
                TargetShip { mmsi: *mmsi, static_info: ship.static_info, trajectories: rej },
            );
        }
    }
    (accepted, rejected)
}

// ---------------------------------------------------------------------------
// Ship-type aggregates

/// Base ship categories per the ITU type taxonomy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum ShipCategory {
    Wig,
    Fishing,
    TugTow,
    Military,
    Sailing,
    Pleasure,
    Hsc,
    Passenger,
    Cargo,
    Tanker,
    Other,
    NotAvailable,
}

impl ShipCategory {
    /// Maps an ITU ship-type code to its base category. Decade-shaped ranges
    /// (20s WIG, 40s HSC, 60s passenger, 70s cargo, 80s tanker) plus the
    /// sub-decade special types (fishing 30, towing 31/32 and tug 52,
    /// military 35, sailing 36, pleasure 37).
    pub fn from_code(code: Option<u8>) -> Self {
        match code {
            None => ShipCategory::NotAvailable,
            Some(c) => match c {
                20..=29 => ShipCategory::Wig,
                30 => ShipCategory::Fishing,
                31 | 32 | 52 => ShipCategory::TugTow,
                35 => ShipCategory::Military,
                36 => ShipCategory::Sailing,
                37 => ShipCategory::Pleasure,
                40..=49 => ShipCategory::Hsc,
                60..=69 => ShipCategory::Passenger,
                70..=79 => ShipCategory::Cargo,
                80..=89 => ShipCategory::Tanker,
                _ => ShipCategory::Other,
            },
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            ShipCategory::Wig => "WIG",
            ShipCategory::Fishing => "FISHING",
            ShipCategory::TugTow => "TUGTOW",
            ShipCategory::Military => "MILITARY",
            ShipCategory::Sailing => "SAILING",
            ShipCategory::Pleasure => "PLEASURE",
            ShipCategory::Hsc => "HSC",
            ShipCategory::Passenger => "PASSENGER",
            ShipCategory::Cargo => "CARGO",
            ShipCategory::Tanker => "TANKER",
            ShipCategory::Other => "OTHER",
            ShipCategory::NotAvailable => "NOTAVAILABLE",
        }
    }
}

impl fmt::Display for ShipCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Mean hull area per base ship category, over all trajectories of ships in
/// that category. Categories with no trajectories are absent.
pub fn ship_type_hull_average(
    ships: &BTreeMap<u32, TargetShip>,
) -> Result<BTreeMap<ShipCategory, f64>, AssessError> {
    let mut sums: BTreeMap<ShipCategory, (f64, u64)> = BTreeMap::new();
    for ship in ships.values() {
        let category = ShipCategory::from_code(ship.static_info.and_then(|s| s.ship_type));
        for traj in &ship.trajectories {
            let area = hull_area(traj)?;
            let entry = sums.entry(category).or_insert((0.0, 0));
            entry.0 += area;
            entry.1 += 1;
        }
    }
    Ok(sums
        .into_iter()
        .map(|(cat, (sum, n))| (cat, sum / n as f64))
        .collect())
}

// ---------------------------------------------------------------------------
// Pixel map

/// Configuration of the course-change pixel map.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PixelMapConfig {
    pub n_msg_max: f64,
    pub area_max_m2: f64,
    pub rows: usize,
    pub cols: usize,
}

impl Default for PixelMapConfig {
    fn default() -> Self {
        Self { n_msg_max: 100.0, area_max_m2: 5.0e4, rows: 100, cols: 100 }
    }
}

/// 2-D binning of (message count, hull area) holding the mean course change
/// per occupied cell. Empty cells are absent.
#[derive(Debug, Clone, Serialize)]
pub struct PixelMap {
    pub config: PixelMapConfig,
    /// (row, col) → mean course change in degrees. Rows bin the hull area,
    /// columns the message count.
    pub cells: BTreeMap<(usize, usize), f64>,
}

fn bin_index(value: f64, max: f64, bins: usize) -> usize {
    // Half-open cells with the final cell closed at the top edge.
    ((value / max * bins as f64).floor() as usize).min(bins - 1)
}

/// Bins trajectories by message count and hull area; each occupied cell
/// carries the mean course change of its trajectories. Trajectories beyond
/// either axis maximum, or too short for a course change, are excluded.
pub fn pixel_map<'a, I>(trajectories: I, config: PixelMapConfig) -> Result<PixelMap, AssessError>
where
    I: IntoIterator<Item = &'a Trajectory>,
{
    let mut sums: BTreeMap<(usize, usize), (f64, u64)> = BTreeMap::new();
    for traj in trajectories {
        let report = assess_trajectory(traj)?;
        let Some(delta) = report.avg_abs_course_change_deg else {
            continue;
        };
        let n = report.n_msg as f64;
        if n > config.n_msg_max || report.hull_area_m2 > config.area_max_m2 {
            continue;
        }
        let row = bin_index(report.hull_area_m2, config.area_max_m2, config.rows);
        let col = bin_index(n, config.n_msg_max, config.cols);
        let entry = sums.entry((row, col)).or_insert((0.0, 0));
        entry.0 += delta;
        entry.1 += 1;
    }
    Ok(PixelMap {
        config,
        cells: sums.into_iter().map(|(k, (sum, n))| (k, sum / n as f64)).collect(),
    })
}
