//! Geodesic and planar primitives: great-circle distance, bounding-box tests,
//! and a transverse Mercator projection used for hull geometry.
//!
//! All distance math runs on a sphere with the volumetric earth radius. The
//! projection uses the same sphere so that planar distances agree with
//! [`haversine`] locally; an ellipsoidal model would disagree with the
//! spherical distances by up to ~0.3% in the mid latitudes, which is more
//! than the error this crate tolerates between the two routes.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decode::AisMessage;

/// Volumetric earth radius in meters.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// Meters per nautical mile.
pub const METERS_PER_NM: f64 = 1852.0;

/// UTM scale factor at the central meridian.
const UTM_SCALE: f64 = 0.9996;
/// UTM false easting in meters.
const UTM_FALSE_EASTING: f64 = 500_000.0;
/// Transverse Mercator is unreliable near the poles.
const POLAR_LIMIT_DEG: f64 = 84.0;

#[derive(Debug, Error, PartialEq)]
pub enum GeoError {
    #[error("latitude {0}° lies in a polar cap (|lat| >= 84°)")]
    PolarRegion(f64),
    #[error("invalid bounding box: minimum must be strictly below maximum")]
    InvalidBoundingBox,
}

/// Geographic bounding box in degrees, edges inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub lat_min: f64,
    pub lat_max: f64,
    pub lon_min: f64,
    pub lon_max: f64,
}

impl BoundingBox {
    pub fn new(lat_min: f64, lat_max: f64, lon_min: f64, lon_max: f64) -> Result<Self, GeoError> {
        if lat_min < lat_max && lon_min < lon_max {
            Ok(Self { lat_min, lat_max, lon_min, lon_max })
        } else {
            Err(GeoError::InvalidBoundingBox)
        }
    }

    pub fn contains(&self, lat: f64, lon: f64) -> bool {
        self.lat_min <= lat && lat <= self.lat_max && self.lon_min <= lon && lon <= self.lon_max
    }
}

/// A position projected onto the transverse Mercator plane of one UTM zone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanePoint {
    pub easting: f64,
    pub northing: f64,
    pub zone: u8,
}

/// Great-circle distance in meters between two positions given in degrees.
pub fn haversine(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    let phi1 = lat1.to_radians();
    let phi2 = lat2.to_radians();
    let dphi = (lat2 - lat1).to_radians();
    let dlambda = (lon2 - lon1).to_radians();
    let s = (dphi / 2.0).sin().powi(2) + phi1.cos() * phi2.cos() * (dlambda / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_M * s.sqrt().min(1.0).asin()
}

/// True iff the message carries an available position inside `bb`.
/// Boundary positions count as inside.
pub fn in_bounds(msg: &AisMessage, bb: &BoundingBox) -> bool {
    match msg.position() {
        Some((lat, lon)) => bb.contains(lat, lon),
        None => false,
    }
}

/// UTM zone number for a longitude in degrees.
pub fn utm_zone(lon: f64) -> u8 {
    // Normalize to [-180, 180) first so lon = 180 maps to zone 1.
    let lon = (lon + 180.0).rem_euclid(360.0) - 180.0;
    (((lon + 180.0) / 6.0).floor() as u8 + 1).min(60)
}

/// Projects a position into the UTM zone derived from its own longitude.
pub fn to_utm(lat: f64, lon: f64) -> Result<PlanePoint, GeoError> {
    to_utm_zoned(lat, lon, utm_zone(lon))
}

/// Projects a position into an explicit zone. Trajectory geometry forces all
/// points of one trajectory into the zone of its first point, so points near
/// zone edges stay on a single chart.
pub fn to_utm_zoned(lat: f64, lon: f64, zone: u8) -> Result<PlanePoint, GeoError> {
    if lat.abs() >= POLAR_LIMIT_DEG {
        return Err(GeoError::PolarRegion(lat));
    }
    let central_meridian = f64::from(zone) * 6.0 - 183.0;
    let phi = lat.to_radians();
    let dlam = (lon - central_meridian).to_radians();

    // Exact spherical transverse Mercator (Gauss-Krüger on the sphere).
    let b = phi.cos() * dlam.sin();
    let x = EARTH_RADIUS_M * UTM_SCALE * ((1.0 + b) / (1.0 - b)).ln() / 2.0;
    let y = EARTH_RADIUS_M * UTM_SCALE * phi.tan().atan2(dlam.cos());

    Ok(PlanePoint { easting: UTM_FALSE_EASTING + x, northing: y, zone })
}
