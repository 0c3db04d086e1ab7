//! Deterministic synthetic fleet generation.
//!
//! Two corpora come out of the same generator: a calibration corpus with
//! full-scale kinematic noise and a test fleet with the noise scaled down,
//! so every clean test pair sits strictly inside thresholds calibrated from
//! the first corpus. Anomalies are injected into the *series* (speeds,
//! courses, time gaps, step multipliers) before positions are integrated,
//! which keeps every non-injected pair kinematically consistent and makes
//! each injection violate exactly one split condition.
//!
//! Corpus shape notes, because the margins depend on them:
//! * Every sixth calibration step is a long gap (40–100 s) with consistent
//!   movement, so the gated distance distribution has enough gap mass that
//!   its tail quantile lands inside the gap-distance range rather than at
//!   the cruising step size.
//! * Test-fleet gaps are shorter (30–55 s) and restricted to slow vessels,
//!   keeping every clean test pair below the time and distance cutoffs.
//! * The distance-injection vessels cruise 1.5× faster in the test fleet
//!   than their calibration twins: covering a gap-sized interval at a speed
//!   the corpus never calibrated is exactly the anomaly the distance
//!   condition exists for, and it leaves the speed-gap condition quiet
//!   because reported and derived speed still agree.

use std::collections::{BTreeMap, BTreeSet};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use aistrack::decode::{AisMessage, VesselStatic};
use aistrack::ingest::MessageStream;
use aistrack::quantiles::SplitThresholds;

const KN_TO_MS: f64 = 1852.0 / 3600.0;
const EARTH_RADIUS_M: f64 = 6_371_000.0;

#[derive(Debug, Clone, Copy)]
pub struct VesselSpec {
    pub mmsi: u32,
    pub length_m: f64,
    pub ship_type: u8,
    pub base_sog: f64,
    /// Speed multiplier applied in the test fleet only.
    pub test_speed_scale: f64,
    /// Slow vessels carry the long-gap behavior in the test fleet.
    pub slow: bool,
    pub start: (f64, f64),
}

impl VesselSpec {
    pub fn speed_in(&self, params: &GenParams) -> f64 {
        if params.use_test_speeds {
            self.base_sog * self.test_speed_scale
        } else {
            self.base_sog
        }
    }
}

/// Twenty vessels: ten lengths covering all bins, one slow and one fast
/// vessel per length.
pub fn vessel_specs() -> Vec<VesselSpec> {
    let lengths = [12.0, 20.0, 30.0, 60.0, 85.0, 110.0, 140.0, 160.0, 185.0, 230.0];
    let types = [30u8, 37, 52, 60, 70, 70, 80, 80, 70, 89];
    let mut specs = Vec::new();
    for (i, (&length, &ship_type)) in lengths.iter().zip(&types).enumerate() {
        let lat = 54.2 + i as f64 * 0.18;
        specs.push(VesselSpec {
            mmsi: 219_100_000 + 2 * i as u32,
            length_m: length,
            ship_type,
            base_sog: 1.8 + i as f64 * 0.12,
            test_speed_scale: 1.0,
            slow: true,
            start: (lat, 9.3),
        });
        specs.push(VesselSpec {
            mmsi: 219_100_001 + 2 * i as u32,
            length_m: length,
            ship_type,
            base_sog: 9.0 + i as f64,
            // The distance-injection pool (the five fastest) outruns its
            // calibration twin in the test fleet.
            test_speed_scale: if i >= 5 { 1.5 } else { 1.0 },
            slow: false,
            start: (lat, 11.0),
        });
    }
    specs
}

#[derive(Debug, Clone, Copy)]
pub struct GenParams {
    pub seed: u64,
    pub messages_per_vessel: usize,
    /// Scales every kinematic perturbation (speed walk, course walk, step
    /// multiplier noise, cadence jitter).
    pub noise: f64,
    /// Long time gaps: (min, max) seconds.
    pub gap_range: (f64, f64),
    /// Steps `k` with `k % modulo == phase` become gaps.
    pub gap_modulo: (usize, usize),
    /// When false, only slow vessels produce long gaps.
    pub gaps_on_all: bool,
    /// Apply each vessel's test speed scale.
    pub use_test_speeds: bool,
}

pub const CALIBRATION: GenParams = GenParams {
    seed: 0x5eed_ca11,
    messages_per_vessel: 800,
    noise: 1.0,
    gap_range: (40.0, 100.0),
    gap_modulo: (6, 3),
    gaps_on_all: true,
    use_test_speeds: false,
};

pub const TEST_FLEET: GenParams = GenParams {
    seed: 0x5eed_f1ee,
    messages_per_vessel: 500,
    noise: 0.45,
    gap_range: (30.0, 55.0),
    gap_modulo: (12, 7),
    gaps_on_all: false,
    use_test_speeds: true,
};

pub fn is_gap_step(params: &GenParams, k: usize) -> bool {
    k % params.gap_modulo.0 == params.gap_modulo.1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InjectionKind {
    TimeGap,
    DistanceJump,
    CourseSpike,
    SpeedJump,
    SpeedGapOutlier,
}

/// Concrete series edit at one step of one vessel. The edit changes the
/// transition into message `step`, so the expected split index is `step - 1`.
#[derive(Debug, Clone, Copy)]
pub struct PlannedInjection {
    pub vessel: usize,
    pub step: usize,
    pub kind: InjectionKind,
    pub op: InjectionOp,
}

#[derive(Debug, Clone, Copy)]
pub enum InjectionOp {
    /// Replace the step's time gap (movement stays consistent).
    SetGap { seconds: f64 },
    /// Rotate the course series from this step on.
    CourseShift { degrees: f64 },
    /// Shift the speed series from this step on.
    SpeedShift { knots: f64 },
    /// Zero the step's movement while the reported speed stays put.
    FreezeStep,
}

pub struct Fleet {
    pub streams: Vec<MessageStream>,
    pub statics: BTreeMap<u32, VesselStatic>,
    /// Expected split indices per stream, parallel to `streams`.
    pub expected_splits: Vec<BTreeSet<usize>>,
}

/// Builds the injection plan against per-vessel thresholds, checking that
/// every magnitude clears its own condition with margin while staying well
/// inside every other condition. The panics are tuning guards: they fire
/// when the generator and the margins drift apart, not in normal runs.
pub fn plan_injections(
    specs: &[VesselSpec],
    thresholds: &[SplitThresholds],
    per_kind: usize,
    target_params: &GenParams,
) -> Vec<PlannedInjection> {
    let slow: Vec<usize> = (0..specs.len()).filter(|&i| specs[i].slow).collect();
    let fast: Vec<usize> = (0..specs.len()).filter(|&i| !specs[i].slow).collect();
    let pools: [(InjectionKind, Vec<usize>); 5] = [
        (InjectionKind::TimeGap, slow[..4].to_vec()),
        (InjectionKind::SpeedJump, slow[4..].to_vec()),
        (InjectionKind::SpeedGapOutlier, fast[..5].to_vec()),
        (InjectionKind::DistanceJump, fast[5..].to_vec()),
        (InjectionKind::CourseSpike, (0..specs.len()).collect()),
    ];

    let n = target_params.messages_per_vessel;
    let mut cursors: Vec<usize> = (0..specs.len()).map(|v| 40 + (v % 7) * 3).collect();
    let mut next_step = |vessel: usize| -> usize {
        let mut step = cursors[vessel];
        while is_gap_step(target_params, step) || is_gap_step(target_params, step + 1) {
            step += 2;
        }
        cursors[vessel] = step + 43;
        assert!(step + 5 < n, "vessel {vessel} ran out of injection slots");
        step
    };

    let mut plan = Vec::new();
    for (kind, pool) in pools {
        for j in 0..per_kind {
            let vessel = pool[j % pool.len()];
            let spec = &specs[vessel];
            let speed = spec.speed_in(target_params);
            let th = &thresholds[vessel];
            let step = next_step(vessel);
            let op = match kind {
                InjectionKind::TimeGap => {
                    let gap = 1.35 * th.time_gap;
                    let dist_nm = (speed + 0.6) * gap / 3600.0;
                    assert!(
                        dist_nm <= 0.72 * th.distance,
                        "time-gap injection travels {dist_nm:.3} nm vs distance cutoff {:.3}",
                        th.distance
                    );
                    InjectionOp::SetGap { seconds: gap }
                }
                InjectionKind::DistanceJump => {
                    let gap = 0.9 * th.time_gap;
                    let dist_nm = (speed - 0.6) * gap / 3600.0;
                    assert!(
                        dist_nm >= 1.3 * th.distance,
                        "distance injection only spans {dist_nm:.3} nm vs cutoff {:.3}",
                        th.distance
                    );
                    InjectionOp::SetGap { seconds: gap }
                }
                InjectionKind::CourseSpike => {
                    let magnitude = th.turn_rate.1.max(-th.turn_rate.0).max(0.025);
                    let degrees = (2.0 * magnitude * 15.0).min(170.0);
                    assert!(degrees / 12.5 > 1.1 * magnitude, "course spike too small");
                    InjectionOp::CourseShift { degrees }
                }
                InjectionKind::SpeedJump => {
                    let jump = (2.0 * th.speed_change).max(0.4);
                    assert!(speed + 1.0 + jump <= 29.5, "speed jump overflows");
                    assert!(jump - 0.2 > 1.1 * th.speed_change, "speed jump too small");
                    InjectionOp::SpeedShift { knots: jump }
                }
                InjectionKind::SpeedGapOutlier => {
                    assert!(
                        speed - 1.1 > 1.3 * th.speed_gap.1,
                        "frozen step would not push the speed gap past {:.3}",
                        th.speed_gap.1
                    );
                    InjectionOp::FreezeStep
                }
            };
            plan.push(PlannedInjection { vessel, step, kind, op });
        }
    }
    plan
}

fn quantize_deg(v: f64) -> f64 {
    (v * 600_000.0).round() / 600_000.0
}

fn quantize_tenth(v: f64) -> f64 {
    (v * 10.0).round() / 10.0
}

/// Generates the fleet. Injections must reference vessels/steps inside the
/// generated range.
pub fn build(params: &GenParams, injections: &[PlannedInjection]) -> Fleet {
    let specs = vessel_specs();
    let n = params.messages_per_vessel;
    let mut streams = Vec::with_capacity(specs.len());
    let mut statics = BTreeMap::new();
    let mut expected_splits = vec![BTreeSet::new(); specs.len()];

    for (v, spec) in specs.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed.wrapping_add(v as u64 * 7919));
        let has_gaps = params.gaps_on_all || spec.slow;
        let base = spec.speed_in(params);

        // Kinematic series.
        let mut dt = vec![0.0f64; n];
        let mut sog = vec![0.0f64; n];
        let mut cog = vec![0.0f64; n];
        let mut est_mult = vec![1.0f64; n];
        sog[0] = base;
        cog[0] = rng.gen_range(0.0..360.0);
        for k in 1..n {
            dt[k] = if has_gaps && is_gap_step(params, k) {
                rng.gen_range(params.gap_range.0..params.gap_range.1).round()
            } else {
                (10.0 + rng.gen_range(-2.0..2.0) * params.noise).round().max(4.0)
            };
            let walk = rng.gen_range(-0.3..0.3) * params.noise;
            sog[k] = (sog[k - 1] + walk).clamp((base - 1.0).max(1.2), (base + 1.0).min(29.0));
            cog[k] = (cog[k - 1] + rng.gen_range(-0.4..0.4) * params.noise).rem_euclid(360.0);
            est_mult[k] = 1.0 + rng.gen_range(-0.03..0.03) * params.noise;
        }

        // Apply the planned series edits.
        for inj in injections.iter().filter(|i| i.vessel == v) {
            let k = inj.step;
            assert!(k > 0 && k < n);
            match inj.op {
                InjectionOp::SetGap { seconds } => dt[k] = seconds.round(),
                InjectionOp::CourseShift { degrees } => {
                    for c in cog.iter_mut().skip(k) {
                        *c = (*c + degrees).rem_euclid(360.0);
                    }
                }
                InjectionOp::SpeedShift { knots } => {
                    for s in sog.iter_mut().skip(k) {
                        *s += knots;
                    }
                }
                InjectionOp::FreezeStep => est_mult[k] = 0.0,
            }
            expected_splits[v].insert(k - 1);
        }

        // Integrate positions and emit quantized messages.
        let mut messages = Vec::with_capacity(n);
        let (mut lat, mut lon) = spec.start;
        let mut t = 1_625_097_600.0 + v as f64;
        for k in 0..n {
            if k > 0 {
                t += dt[k];
                let avg_ms = (sog[k - 1] + sog[k]) / 2.0 * KN_TO_MS;
                let step_m = avg_ms * dt[k] * est_mult[k];
                let bearing = cog[k].to_radians();
                lat += step_m * bearing.cos() / EARTH_RADIUS_M * 180.0 / std::f64::consts::PI;
                lon += step_m * bearing.sin()
                    / (EARTH_RADIUS_M * lat.to_radians().cos())
                    * 180.0
                    / std::f64::consts::PI;
            }
            messages.push(AisMessage {
                recv_time: t,
                mmsi: spec.mmsi,
                msg_type: 1,
                lat: Some(quantize_deg(lat)),
                lon: Some(quantize_deg(lon)),
                sog: Some(quantize_tenth(sog[k])),
                cog: Some(quantize_tenth(cog[k]).rem_euclid(360.0)),
                originator: Some("DK".to_string()),
            });
        }
        streams.push(MessageStream { mmsi: spec.mmsi, messages });
        statics.insert(
            spec.mmsi,
            VesselStatic {
                mmsi: spec.mmsi,
                ship_length: Some(spec.length_m),
                ship_type: Some(spec.ship_type),
            },
        );
    }

    Fleet { streams, statics, expected_splits }
}
