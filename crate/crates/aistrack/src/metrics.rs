//! Pairwise metrics between consecutive messages of one stream.
//!
//! Five quantities drive calibration and splitting: the time gap, the change
//! in reported speed, the turning rate, the traveled distance, and the gap
//! between reported and position-derived speed.

use thiserror::Error;

use crate::decode::AisMessage;
use crate::geo::{haversine, METERS_PER_NM};

/// Seconds per hour over meters per nautical mile: converts m/s to knots.
const MS_TO_KNOTS: f64 = 3600.0 / 1852.0;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    /// The pair has no positive time gap; callers treat it as a split candidate.
    #[error("non-positive time gap between messages")]
    ZeroTimeGap,
    #[error("position unavailable on one of the messages")]
    MissingPosition,
    #[error("speed unavailable on one of the messages")]
    MissingSpeed,
    #[error("course unavailable on one of the messages")]
    MissingCourse,
}

/// How course differences are formed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum CogConvention {
    /// Wrap-aware signed difference in (-180°, 180°]. A 359°→1° heading change
    /// reads as +2°, matching the physical turn.
    #[default]
    SignedWrap,
    /// Plain subtraction of the reported values. Kept as a compatibility mode;
    /// it reads a 359°→1° change as -358°.
    Raw,
}

/// All five pairwise metrics for consecutive messages.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairMetrics {
    /// Time gap in seconds.
    pub dt: f64,
    /// Signed change in reported speed, knots.
    pub dsog: f64,
    /// Turning rate in degrees per second.
    pub rot: f64,
    /// Haversine distance in nautical miles.
    pub dist: f64,
    /// Average reported speed minus position-derived speed, knots.
    pub speed_gap: f64,
}

/// Smallest signed angle equivalent to `delta` degrees, in (-180, 180].
pub(crate) fn wrap_angle_deg(delta: f64) -> f64 {
    let mut d = delta.rem_euclid(360.0);
    if d > 180.0 {
        d -= 360.0;
    }
    d
}

/// Arithmetic mean of the two reported speeds, knots.
pub fn avg_sog(a: &AisMessage, b: &AisMessage) -> Result<f64, MetricsError> {
    match (a.sog, b.sog) {
        (Some(x), Some(y)) => Ok((x + y) / 2.0),
        _ => Err(MetricsError::MissingSpeed),
    }
}

/// Speed in knots derived from the positional displacement over the time gap.
pub fn est_sog(a: &AisMessage, b: &AisMessage) -> Result<f64, MetricsError> {
    let (lat1, lon1) = a.position().ok_or(MetricsError::MissingPosition)?;
    let (lat2, lon2) = b.position().ok_or(MetricsError::MissingPosition)?;
    let dt = b.recv_time - a.recv_time;
    if dt <= 0.0 {
        return Err(MetricsError::ZeroTimeGap);
    }
    Ok(haversine(lat1, lon1, lat2, lon2) / dt * MS_TO_KNOTS)
}

/// Course change divided by the time gap, degrees per second.
pub fn turning_rate(a: &AisMessage, b: &AisMessage) -> Result<f64, MetricsError> {
    turning_rate_with(a, b, CogConvention::SignedWrap)
}

pub fn turning_rate_with(
    a: &AisMessage,
    b: &AisMessage,
    conv: CogConvention,
) -> Result<f64, MetricsError> {
    let (ca, cb) = match (a.cog, b.cog) {
        (Some(x), Some(y)) => (x, y),
        _ => return Err(MetricsError::MissingCourse),
    };
    let dt = b.recv_time - a.recv_time;
    if dt <= 0.0 {
        return Err(MetricsError::ZeroTimeGap);
    }
    let dcog = match conv {
        CogConvention::SignedWrap => wrap_angle_deg(cb - ca),
        CogConvention::Raw => cb - ca,
    };
    Ok(dcog / dt)
}

/// Computes all five metrics for a consecutive pair.
///
/// A missing course contributes a turning rate of zero (no evidence of
/// turning); missing positions or speeds are errors because every other
/// metric depends on them.
pub fn pair_metrics(a: &AisMessage, b: &AisMessage) -> Result<PairMetrics, MetricsError> {
    pair_metrics_with(a, b, CogConvention::SignedWrap)
}

pub fn pair_metrics_with(
    a: &AisMessage,
    b: &AisMessage,
    conv: CogConvention,
) -> Result<PairMetrics, MetricsError> {
    let (lat1, lon1) = a.position().ok_or(MetricsError::MissingPosition)?;
    let (lat2, lon2) = b.position().ok_or(MetricsError::MissingPosition)?;
    let (sog_a, sog_b) = match (a.sog, b.sog) {
        (Some(x), Some(y)) => (x, y),
        _ => return Err(MetricsError::MissingSpeed),
    };
    let dt = b.recv_time - a.recv_time;
    if dt <= 0.0 {
        return Err(MetricsError::ZeroTimeGap);
    }
    let dist_m = haversine(lat1, lon1, lat2, lon2);
    let est = dist_m / dt * MS_TO_KNOTS;
    let rot = match turning_rate_with(a, b, conv) {
        Ok(r) => r,
        Err(MetricsError::MissingCourse) => 0.0,
        Err(e) => return Err(e),
    };
    Ok(PairMetrics {
        dt,
        dsog: sog_b - sog_a,
        rot,
        dist: dist_m / METERS_PER_NM,
        speed_gap: (sog_a + sog_b) / 2.0 - est,
    })
}
