//! Reference extraction methods used for comparison, plus the comparison
//! report itself.
//!
//! Two well-known approaches bracket the quantile-calibrated splitter: a
//! fixed-threshold splitter (split on derived speed above 15 kn or gaps over
//! 600 s, with a send-time plausibility filter when send timestamps exist)
//! and a pure forward-scan exclusion filter (drop a message whose turning
//! rate or derived speed against the last kept message exceeds fixed limits).

use std::io::Write;

use serde::Serialize;
use thiserror::Error;

use crate::decode::AisMessage;
use crate::ingest::MessageStream;
use crate::metrics::{est_sog, turning_rate, MetricsError};
use crate::splitter::{rejoin_by, Trajectory};

/// Fixed-threshold splitter limits.
pub const FIXED_SPLIT_EST_SOG_KN: f64 = 15.0;
pub const FIXED_SPLIT_TIME_GAP_S: f64 = 600.0;
/// Send/receive timestamp plausibility window in seconds.
pub const SEND_TIME_WINDOW_S: f64 = 5.0;

#[derive(Debug, Error, PartialEq)]
pub enum BaselineError {
    #[error("send_time slice length {got} does not match message count {expected}")]
    SendTimeLengthMismatch { got: usize, expected: usize },
}

/// Output of one extraction method, shaped for comparison.
#[derive(Debug, Clone)]
pub struct MethodResult {
    pub trajectories: Vec<Trajectory>,
    /// Messages removed by the method (filters, send-time drops, singletons).
    pub discarded: usize,
    /// Split points introduced, when the method splits at all.
    pub split_points: Option<usize>,
    /// Fragment pairs merged back during the rejoin pass.
    pub rejoined: usize,
}

/// Fixed-threshold split extraction.
///
/// When `send_times` is given (one entry per message), messages whose send
/// and receive timestamps differ by more than five seconds are dropped
/// first. The stream then splits where the derived speed exceeds 15 kn or
/// the time gap exceeds 600 s; singletons are removed and boundary pairs are
/// rejoined using the derived-speed condition alone.
pub fn split_fixed_thresholds(
    stream: &MessageStream,
    send_times: Option<&[f64]>,
) -> Result<MethodResult, BaselineError> {
    let mut discarded = 0usize;
    let kept: Vec<AisMessage> = match send_times {
        Some(times) => {
            if times.len() != stream.messages.len() {
                return Err(BaselineError::SendTimeLengthMismatch {
                    got: times.len(),
                    expected: stream.messages.len(),
                });
            }
            stream
                .messages
                .iter()
                .zip(times)
                .filter(|(m, &sent)| (m.recv_time - sent).abs() <= SEND_TIME_WINDOW_S)
                .map(|(m, _)| m.clone())
                .collect()
        }
        None => stream.messages.clone(),
    };
    discarded += stream.messages.len() - kept.len();

    let splits_here = |a: &AisMessage, b: &AisMessage| -> bool {
        if b.recv_time - a.recv_time > FIXED_SPLIT_TIME_GAP_S {
            return true;
        }
        match est_sog(a, b) {
            Ok(v) => v > FIXED_SPLIT_EST_SOG_KN,
            // Zero gap or missing positions: cannot certify continuity.
            Err(_) => true,
        }
    };

    let mut trajectories = Vec::new();
    let mut split_points = 0usize;
    let mut start = 0usize;
    for i in 0..kept.len().saturating_sub(1) {
        if splits_here(&kept[i], &kept[i + 1]) {
            split_points += 1;
            push_fragment(&mut trajectories, &mut discarded, stream.mmsi, &kept, start, i + 1);
            start = i + 1;
        }
    }
    push_fragment(&mut trajectories, &mut discarded, stream.mmsi, &kept, start, kept.len());

    // Rejoin on the derived-speed condition only.
    let (trajectories, rejoined) = rejoin_by(trajectories, |a, b| match est_sog(a, b) {
        Ok(v) => v > FIXED_SPLIT_EST_SOG_KN,
        Err(_) => true,
    });

    Ok(MethodResult { trajectories, discarded, split_points: Some(split_points), rejoined })
}

fn push_fragment(
    trajectories: &mut Vec<Trajectory>,
    discarded: &mut usize,
    mmsi: u32,
    messages: &[AisMessage],
    start: usize,
    end: usize,
) {
    match end - start {
        0 => {}
        1 => *discarded += 1,
        _ => trajectories.push(Trajectory {
            mmsi,
            messages: messages[start..end].to_vec(),
            source_span: (start, end),
        }),
    }
}

/// Forward-scan exclusion: a message is dropped when its turning rate or
/// derived speed against the last *kept* message exceeds the limits. No
/// splitting happens; the survivors stay one stream.
pub fn filter_forward_scan(stream: &MessageStream, c_lim: f64, v_lim: f64) -> MethodResult {
    assert!(c_lim > 0.0 && v_lim > 0.0, "limits must be positive");
    let mut kept: Vec<AisMessage> = Vec::with_capacity(stream.messages.len());
    for msg in &stream.messages {
        let Some(last) = kept.last() else {
            kept.push(msg.clone());
            continue;
        };
        let too_fast = match est_sog(last, msg) {
            Ok(v) => v > v_lim,
            Err(MetricsError::ZeroTimeGap) => last.position() != msg.position(),
            Err(_) => true,
        };
        let turns_too_hard = match turning_rate(last, msg) {
            Ok(r) => r.abs() > c_lim,
            Err(MetricsError::ZeroTimeGap) => last.cog != msg.cog,
            Err(_) => false,
        };
        if too_fast || turns_too_hard {
            continue;
        }
        kept.push(msg.clone());
    }
    let discarded = stream.messages.len() - kept.len();
    let trajectories = if kept.is_empty() {
        Vec::new()
    } else {
        let n = kept.len();
        vec![Trajectory { mmsi: stream.mmsi, messages: kept, source_span: (0, n) }]
    };
    MethodResult { trajectories, discarded, split_points: None, rejoined: 0 }
}

/// Where a maximum was attained: trajectory index and pair index within it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Witness {
    pub trajectory: usize,
    pub pair: usize,
}

/// One comparison row: counts plus the worst consecutive-pair values over
/// all emitted trajectories, each with the pair that attained it.
#[derive(Debug, Clone, Serialize)]
pub struct ComparisonRow {
    pub method: String,
    pub discarded_messages: usize,
    pub split_points: Option<usize>,
    pub max_turning_rate_deg_s: f64,
    pub max_turning_rate_witness: Option<Witness>,
    pub max_velocity_change_kn_s: f64,
    pub max_velocity_change_witness: Option<Witness>,
    pub max_distance_nm: f64,
    pub max_distance_witness: Option<Witness>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    pub rows: Vec<ComparisonRow>,
}

/// Builds the comparison over named method results that all derive from the
/// same raw stream.
pub fn compare(named: &[(String, MethodResult)]) -> ComparisonReport {
    let rows = named
        .iter()
        .map(|(name, result)| {
            let mut row = ComparisonRow {
                method: name.clone(),
                discarded_messages: result.discarded,
                split_points: result.split_points,
                max_turning_rate_deg_s: 0.0,
                max_turning_rate_witness: None,
                max_velocity_change_kn_s: 0.0,
                max_velocity_change_witness: None,
                max_distance_nm: 0.0,
                max_distance_witness: None,
            };
            for (ti, traj) in result.trajectories.iter().enumerate() {
                for (pi, pair) in traj.messages.windows(2).enumerate() {
                    let witness = Witness { trajectory: ti, pair: pi };
                    if let Ok(rate) = turning_rate(&pair[0], &pair[1]) {
                        if row.max_turning_rate_witness.is_none()
                            || rate.abs() > row.max_turning_rate_deg_s
                        {
                            row.max_turning_rate_deg_s = rate.abs();
                            row.max_turning_rate_witness = Some(witness);
                        }
                    }
                    let dt = pair[1].recv_time - pair[0].recv_time;
                    if let (Some(s0), Some(s1)) = (pair[0].sog, pair[1].sog) {
                        if dt > 0.0 {
                            let rate = (s1 - s0).abs() / dt;
                            if row.max_velocity_change_witness.is_none()
                                || rate > row.max_velocity_change_kn_s
                            {
                                row.max_velocity_change_kn_s = rate;
                                row.max_velocity_change_witness = Some(witness);
                            }
                        }
                    }
                    if let (Some((la1, lo1)), Some((la2, lo2))) =
                        (pair[0].position(), pair[1].position())
                    {
                        let nm = crate::geo::haversine(la1, lo1, la2, lo2) / crate::geo::METERS_PER_NM;
                        if row.max_distance_witness.is_none() || nm > row.max_distance_nm {
                            row.max_distance_nm = nm;
                            row.max_distance_witness = Some(witness);
                        }
                    }
                }
            }
            row
        })
        .collect();
    ComparisonReport { rows }
}

impl ComparisonReport {
    /// CSV with the five comparison columns plus witness indices.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(
            w,
            "method,discarded_messages,split_points,max_turning_rate_deg_s,\
             max_velocity_change_kn_s,max_distance_nm,witness_turning,witness_velocity,witness_distance"
        )?;
        for row in &self.rows {
            let splits = row.split_points.map(|s| s.to_string()).unwrap_or_default();
            let fmt_witness = |w: &Option<Witness>| {
                w.map(|w| format!("t{}:{}", w.trajectory, w.pair)).unwrap_or_default()
            };
            writeln!(
                w,
                "{},{},{},{:.6},{:.6},{:.6},{},{},{}",
                row.method,
                row.discarded_messages,
                splits,
                row.max_turning_rate_deg_s,
                row.max_velocity_change_kn_s,
                row.max_distance_nm,
                fmt_witness(&row.max_turning_rate_witness),
                fmt_witness(&row.max_velocity_change_witness),
                fmt_witness(&row.max_distance_witness),
            )?;
        }
        Ok(())
    }
}
