//! Per-message exclusion: spatial bounds, speed window, unavailable values.

use serde::Serialize;

use crate::decode::AisMessage;
use crate::geo::{in_bounds, BoundingBox};

/// Default speed window in knots. Below the minimum a vessel is effectively
/// moored; above the maximum the report is almost certainly equipment error.
pub const SOG_MIN_KN: f64 = 1.0;
pub const SOG_MAX_KN: f64 = 30.0;

/// The transport's "speed not available" placeholder in knots.
const SOG_PLACEHOLDER_KN: f64 = 102.3;

/// Per-reason exclusion counters. The counters plus the kept count always
/// reconcile to the input count.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DropStats {
    pub position_unavailable: u64,
    pub out_of_bounds: u64,
    pub sog_unavailable: u64,
    pub sog_below_min: u64,
    pub sog_above_max: u64,
}

impl DropStats {
    pub fn total(&self) -> u64 {
        self.position_unavailable
            + self.out_of_bounds
            + self.sog_unavailable
            + self.sog_below_min
            + self.sog_above_max
    }
}

/// Keeps messages with an available position inside `bb` and an available
/// speed inside the closed interval `[sog_min, sog_max]`. Order preserved.
pub fn filter_messages(
    messages: Vec<AisMessage>,
    bb: &BoundingBox,
    sog_min: f64,
    sog_max: f64,
) -> (Vec<AisMessage>, DropStats) {
    let mut stats = DropStats::default();
    let mut kept = Vec::with_capacity(messages.len());
    for msg in messages {
        if msg.position().is_none() {
            stats.position_unavailable += 1;
            continue;
        }
        if !in_bounds(&msg, bb) {
            stats.out_of_bounds += 1;
            continue;
        }
        let sog = match msg.sog {
            Some(s) if s != SOG_PLACEHOLDER_KN => s,
            _ => {
                stats.sog_unavailable += 1;
                continue;
            }
        };
        if sog < sog_min {
            stats.sog_below_min += 1;
            continue;
        }
        if sog > sog_max {
            stats.sog_above_max += 1;
            continue;
        }
        kept.push(msg);
    }
    (kept, stats)
}

/// Order-preserving subsequence where `predicate` holds. The hook point for
/// custom pre-filter stages.
pub fn apply_preprocessor<F>(messages: Vec<AisMessage>, predicate: F) -> Vec<AisMessage>
where
    F: Fn(&AisMessage) -> bool,
{
    messages.into_iter().filter(|m| predicate(m)).collect()
}
