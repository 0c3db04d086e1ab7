//! Split-point detection and trajectory extraction.
//!
//! A stream is cut between two consecutive messages when any of five
//! conditions fires against the calibrated thresholds: the speed change
//! exceeds its cutoff, the turning rate leaves its admissible interval, the
//! time gap or traveled distance exceeds their cutoffs, or the gap between
//! reported and position-derived speed leaves its interval. Fragments of a
//! single message are discarded, and adjacent fragments whose boundary pair
//! fires no condition are rejoined, so removing one bad message from an
//! otherwise clean track yields one continuous trajectory again.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::decode::{AisMessage, VesselStatic};
use crate::geo::{haversine, METERS_PER_NM};
use crate::ingest::MessageStream;
use crate::metrics::{pair_metrics, MetricsError};
use crate::quantiles::{QuantileError, QuantileTable, SplitThresholds};

#[derive(Debug, Error)]
pub enum SplitError {
    #[error("a quantile table is required unless splitting is skipped")]
    MissingTable,
    #[error(transparent)]
    Quantile(#[from] QuantileError),
}

/// A time-ordered run of messages attributed to one navigational path.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub mmsi: u32,
    pub messages: Vec<AisMessage>,
    /// Index range in the parent stream (start inclusive, end exclusive);
    /// spans of trajectories merged across a dropped singleton include the
    /// singleton's index.
    pub source_span: (usize, usize),
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.messages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.messages.is_empty()
    }

    /// Sum of consecutive great-circle legs in nautical miles.
    pub fn path_length_nm(&self) -> f64 {
        self.messages
            .windows(2)
            .map(|pair| match (pair[0].position(), pair[1].position()) {
                (Some((la1, lo1)), Some((la2, lo2))) => haversine(la1, lo1, la2, lo2),
                _ => 0.0,
            })
            .sum::<f64>()
            / METERS_PER_NM
    }
}

/// One transmitter with its static data and extracted trajectories.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetShip {
    pub mmsi: u32,
    pub static_info: Option<VesselStatic>,
    pub trajectories: Vec<Trajectory>,
}

/// Result of splitting one stream.
#[derive(Debug, Clone)]
pub struct SplitOutcome {
    pub trajectories: Vec<Trajectory>,
    /// Single-message fragments removed after cutting.
    pub dropped: Vec<AisMessage>,
    pub split_points: BTreeSet<usize>,
}

/// True when the pair violates any of the five split conditions. Pairs whose
/// metrics cannot be computed (zero time gap, missing kinematics) are split
/// candidates: distinct content at one timestamp signals the MMSI is shared
/// by several transmitters.
pub fn is_split_pair(a: &AisMessage, b: &AisMessage, th: &SplitThresholds) -> bool {
    let pm = match pair_metrics(a, b) {
        Ok(pm) => pm,
        Err(MetricsError::ZeroTimeGap) => return true,
        Err(_) => return true,
    };
    pm.dsog > th.speed_change
        || pm.rot < th.turn_rate.0
        || pm.rot > th.turn_rate.1
        || pm.dt > th.time_gap
        || pm.dist > th.distance
        || pm.speed_gap < th.speed_gap.0
        || pm.speed_gap > th.speed_gap.1
}

/// Indices `i` where the stream splits between message `i` and `i + 1`.
pub fn find_split_points(stream: &MessageStream, th: &SplitThresholds) -> BTreeSet<usize> {
    stream
        .messages
        .windows(2)
        .enumerate()
        .filter(|(_, pair)| is_split_pair(&pair[0], &pair[1], th))
        .map(|(i, _)| i)
        .collect()
}

/// Cuts a stream at its split points and discards single-message fragments.
pub fn split(stream: &MessageStream, th: &SplitThresholds) -> SplitOutcome {
    let split_points = find_split_points(stream, th);
    let mut trajectories = Vec::new();
    let mut dropped = Vec::new();
    let mut start = 0usize;
    let n = stream.messages.len();
    for end in split_points.iter().map(|&i| i + 1).chain([n]) {
        if end == start {
            continue;
        }
        if end - start == 1 {
            dropped.push(stream.messages[start].clone());
        } else {
            trajectories.push(Trajectory {
                mmsi: stream.mmsi,
                messages: stream.messages[start..end].to_vec(),
                source_span: (start, end),
            });
        }
        start = end;
    }
    SplitOutcome { trajectories, dropped, split_points }
}

/// Merges adjacent trajectories whose boundary pair passes `keep_apart`,
/// iterating until no merge applies. Returns the trajectories and the number
/// of merges performed.
pub(crate) fn rejoin_by<F>(trajectories: Vec<Trajectory>, keep_apart: F) -> (Vec<Trajectory>, usize)
where
    F: Fn(&AisMessage, &AisMessage) -> bool,
{
    let mut current = trajectories;
    let mut merges = 0usize;
    loop {
        let mut merged_any = false;
        let mut next: Vec<Trajectory> = Vec::with_capacity(current.len());
        for traj in current {
            match next.last_mut() {
                Some(prev)
                    if !keep_apart(
                        prev.messages.last().expect("trajectories are non-empty"),
                        traj.messages.first().expect("trajectories are non-empty"),
                    ) =>
                {
                    prev.messages.extend(traj.messages);
                    prev.source_span.1 = traj.source_span.1;
                    merges += 1;
                    merged_any = true;
                }
                _ => next.push(traj),
            }
        }
        current = next;
        if !merged_any {
            return (current, merges);
        }
    }
}

/// Rejoins fragments split apart by a since-removed singleton: only the
/// boundary pair is re-tested, interior pairs are already guaranteed.
pub fn rejoin(trajectories: Vec<Trajectory>, th: &SplitThresholds) -> (Vec<Trajectory>, usize) {
    rejoin_by(trajectories, |a, b| is_split_pair(a, b, th))
}

/// Pipeline counters for one extraction run.
#[derive(Debug, Default, Clone, Copy, Serialize)]
pub struct ExtractStats {
    pub messages_in: u64,
    pub split_points: u64,
    pub dropped_singletons: u64,
    pub rejoined_tracks: u64,
    pub trajectory_count: u64,
    pub avg_trajectory_len_nm: f64,
}

/// Extraction output: one [`TargetShip`] per MMSI plus run counters.
#[derive(Debug)]
pub struct Extraction {
    pub ships: BTreeMap<u32, TargetShip>,
    pub stats: ExtractStats,
}

/// Runs threshold extraction, splitting, and rejoining per vessel.
///
/// With `skip_split` every ship comes back with a single trajectory holding
/// its full ordered stream and no table is needed.
pub fn extract_all(
    streams: &[MessageStream],
    statics: &BTreeMap<u32, VesselStatic>,
    table: Option<&QuantileTable>,
    alpha: f64,
    skip_split: bool,
) -> Result<Extraction, SplitError> {
    let mut stats = ExtractStats::default();
    let mut ships = BTreeMap::new();

    if skip_split {
        for stream in streams {
            stats.messages_in += stream.messages.len() as u64;
            ships.insert(
                stream.mmsi,
                TargetShip {
                    mmsi: stream.mmsi,
                    static_info: statics.get(&stream.mmsi).copied(),
                    trajectories: vec![Trajectory {
                        mmsi: stream.mmsi,
                        messages: stream.messages.clone(),
                        source_span: (0, stream.messages.len()),
                    }],
                },
            );
        }
    } else {
        let table = table.ok_or(SplitError::MissingTable)?;
        let per_stream: Vec<(TargetShip, usize, usize, usize)> = streams
            .par_iter()
            .map(|stream| {
                let static_info = statics.get(&stream.mmsi).copied();
                let length = static_info.and_then(|s| s.ship_length);
                let th = table.thresholds(length, alpha)?;
                let outcome = split(stream, &th);
                let (trajectories, rejoined) = rejoin(outcome.trajectories, &th);
                Ok((
                    TargetShip { mmsi: stream.mmsi, static_info, trajectories },
                    outcome.split_points.len(),
                    outcome.dropped.len(),
                    rejoined,
                ))
            })
            .collect::<Result<_, SplitError>>()?;
        for (stream, (ship, splits, dropped, rejoined)) in streams.iter().zip(per_stream) {
            stats.messages_in += stream.messages.len() as u64;
            stats.split_points += splits as u64;
            stats.dropped_singletons += dropped as u64;
            stats.rejoined_tracks += rejoined as u64;
            ships.insert(ship.mmsi, ship);
        }
    }

    let mut total_len_nm = 0.0;
    for ship in ships.values() {
        for traj in &ship.trajectories {
            stats.trajectory_count += 1;
            total_len_nm += traj.path_length_nm();
        }
    }
    if stats.trajectory_count > 0 {
        stats.avg_trajectory_len_nm = total_len_nm / stats.trajectory_count as f64;
    }
    Ok(Extraction { ships, stats })
}
