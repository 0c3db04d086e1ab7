//! Acceptance suite: one test per criterion, each printing its own
//! pass/fail line and enforcing its runtime budget.

mod fleet;
mod oracle;

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use aistrack::assess::{avg_abs_course_change, convex_hull, course_change_from_complexity, polygon_area};
use aistrack::baselines::{compare, filter_forward_scan, split_fixed_thresholds};
use aistrack::decode::{self, AisMessage};
use aistrack::export::density_grid;
use aistrack::filters::filter_messages;
use aistrack::geo::{self, BoundingBox};
use aistrack::ingest::MessageStream;
use aistrack::metrics::pair_metrics;
use aistrack::quantiles::{calibrate, calibrate_with_gate, CalibrateOptions, LengthBins, QuantileSketch};
use aistrack::splitter::{extract_all, find_split_points, is_split_pair, rejoin, split, Trajectory};

use fleet::{InjectionKind, CALIBRATION, TEST_FLEET};

const TABLE1_TYPE1: &str = "!AIVDM,1,1,,,13`dUP0P000GqBjMw`im0wvD0000,0*01";
const TABLE1_TYPE5_A: &str =
    "!AIVDM,2,1,7,B,539g?6T00000@8i6221HU=E8LU>222222222220j1h5334@P04hTQCADR,0*15";
const TABLE1_TYPE5_B: &str = "!AIVDM,2,2,7,B,0EQC`888888880,2*27";

fn decode_sentences(lines: &[&str]) -> decode::BitPayload {
    let sentences: Vec<_> = lines.iter().map(|l| decode::parse_sentence(l).unwrap()).collect();
    decode::assemble(&sentences).unwrap()
}

/// Criterion 1: the decoder agrees with the independent bit slicer on the
/// reference sentences and inverts the encoder on randomized valid payloads.
#[test]
fn criterion_01_decoder_vectors() {
    let start = Instant::now();

    // Reference type-1 sentence against the oracle slicer.
    let payload = decode_sentences(&[TABLE1_TYPE1]);
    let sentence = decode::parse_sentence(TABLE1_TYPE1).unwrap();
    let reference = oracle::BitVec::from_armored(&sentence.payload, sentence.fill_bits as usize);
    let sliced = oracle::slice_dynamic(&reference);
    let msg = decode::decode_dynamic(&payload).unwrap();
    assert_eq!(msg.msg_type, sliced.msg_type);
    assert_eq!(msg.mmsi, sliced.mmsi);
    assert_eq!(msg.sog, Some(f64::from(sliced.sog_raw) / 10.0));
    assert_eq!(msg.cog, Some(f64::from(sliced.cog_raw) / 10.0));
    assert_eq!(msg.lat, Some(f64::from(sliced.lat_raw) / 600_000.0));
    assert_eq!(msg.lon, Some(f64::from(sliced.lon_raw) / 600_000.0));

    // Reference type-5 pair against the oracle slicer.
    let payload5 = decode_sentences(&[TABLE1_TYPE5_A, TABLE1_TYPE5_B]);
    let a = decode::parse_sentence(TABLE1_TYPE5_A).unwrap();
    let b = decode::parse_sentence(TABLE1_TYPE5_B).unwrap();
    let mut combined = a.payload.clone();
    combined.push_str(&b.payload);
    let ref5 = oracle::BitVec::from_armored(&combined, b.fill_bits as usize);
    let sliced5 = oracle::slice_static_type5(&ref5);
    let vessel = decode::decode_static(&payload5).unwrap();
    assert_eq!(vessel.mmsi, sliced5.mmsi);
    assert_eq!(vessel.ship_type, Some(sliced5.ship_type));
    assert_eq!(
        vessel.ship_length,
        Some(f64::from(sliced5.to_bow + sliced5.to_stern))
    );

    // 1000 randomized valid payloads round-trip field for field.
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for i in 0..1000 {
        let msg_type = [1u8, 2, 3, 18][i % 4];
        let raw = oracle::RawDynamic {
            msg_type,
            mmsi: rng.gen_range(100_000_000..=999_999_999),
            sog_raw: if i % 17 == 0 { 1023 } else { rng.gen_range(0..=1022) },
            lon_raw: if i % 23 == 0 {
                181 * 600_000
            } else {
                rng.gen_range(-180 * 600_000..=180 * 600_000)
            },
            lat_raw: if i % 29 == 0 {
                91 * 600_000
            } else {
                rng.gen_range(-90 * 600_000..=90 * 600_000)
            },
            cog_raw: if i % 19 == 0 { 3600 } else { rng.gen_range(0..3600) },
        };
        let line = oracle::dynamic_sentence(&raw);
        let payload = decode_sentences(&[&line]);
        let msg = decode::decode_dynamic(&payload).unwrap();
        assert_eq!(msg.msg_type, raw.msg_type);
        assert_eq!(msg.mmsi, raw.mmsi);
        let expect_sog = (raw.sog_raw != 1023).then(|| f64::from(raw.sog_raw) / 10.0);
        let expect_lon = (raw.lon_raw != 181 * 600_000).then(|| f64::from(raw.lon_raw) / 600_000.0);
        let expect_lat = (raw.lat_raw != 91 * 600_000).then(|| f64::from(raw.lat_raw) / 600_000.0);
        let expect_cog = (raw.cog_raw != 3600).then(|| f64::from(raw.cog_raw) / 10.0);
        assert_eq!(msg.sog, expect_sog, "payload {i}");
        assert_eq!(msg.lon, expect_lon, "payload {i}");
        assert_eq!(msg.lat, expect_lat, "payload {i}");
        assert_eq!(msg.cog, expect_cog, "payload {i}");
    }

    assert!(start.elapsed().as_secs_f64() < 1.0, "criterion 1 over budget");
}

fn rank_error(sorted: &[f64], p: f64, estimate: f64) -> f64 {
    let n = sorted.len() as f64;
    let below = sorted.partition_point(|&v| v < estimate) as f64;
    let at_or_below = sorted.partition_point(|&v| v <= estimate) as f64;
    let target = (p * n).ceil().clamp(1.0, n);
    if target < below {
        (below - target) / n
    } else if target > at_or_below {
        (target - at_or_below) / n
    } else {
        0.0
    }
}

/// Criterion 2: the stored quantile grid stays within 0.5% rank error of a
/// full sort at one million samples per metric, single-shot and two-shard.
#[test]
fn criterion_02_quantile_oracle_equivalence() {
    let start = Instant::now();
    let grid: Vec<f64> = (1..=199).map(|i| f64::from(i) * 0.005).collect();
    let n = 1_000_000usize;

    // Five metric-shaped synthetic distributions.
    type Sampler = Box<dyn Fn(&mut ChaCha8Rng) -> f64>;
    let distributions: Vec<Sampler> = vec![
        // speed changes: small, zero-heavy
        Box::new(|r| (r.gen::<f64>() - 0.5).powi(3) * 20.0),
        // turning rates: symmetric around zero
        Box::new(|r| (r.gen::<f64>() - 0.5) * 0.2),
        // time gaps: mostly short with a heavy tail
        Box::new(|r| if r.gen_bool(0.92) { r.gen_range(8.0..12.0) } else { r.gen_range(60.0..400.0) }),
        // distances: positive, skewed
        Box::new(|r| r.gen::<f64>().powi(2) * 2.0),
        // speed gaps: bimodal
        Box::new(|r| if r.gen_bool(0.5) { r.gen_range(-1.0..0.0) } else { r.gen_range(0.0..4.0) }),
    ];

    for (d, sample) in distributions.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + d as u64);
        let values: Vec<f64> = (0..n).map(|_| sample(&mut rng)).collect();

        let mut single = QuantileSketch::default();
        let mut shard_a = QuantileSketch::default();
        let mut shard_b = QuantileSketch::default();
        for (i, &v) in values.iter().enumerate() {
            single.insert(v);
            if i % 2 == 0 {
                shard_a.insert(v);
            } else {
                shard_b.insert(v);
            }
        }
        shard_a.merge(&shard_b);

        let mut sorted = values;
        sorted.sort_unstable_by(f64::total_cmp);
        let single_grid = single.quantiles(&grid).unwrap();
        let merged_grid = shard_a.quantiles(&grid).unwrap();
        for (i, &p) in grid.iter().enumerate() {
            let e1 = rank_error(&sorted, p, single_grid[i]);
            let e2 = rank_error(&sorted, p, merged_grid[i]);
            assert!(e1 <= 0.005, "distribution {d}: single-shot rank error {e1} at p={p}");
            assert!(e2 <= 0.005, "distribution {d}: merged rank error {e2} at p={p}");
        }
    }

    // Table-level shard workflow: two half-fleet shards merged against the
    // full-corpus gate agree with the exact gated samples.
    let cal = fleet::build(&CALIBRATION, &[]);
    let opts = CalibrateOptions::default();
    let full = calibrate(&cal.streams, &cal.statics, LengthBins::standard(), &opts).unwrap();
    let gate = full.gate_value_seconds;
    let (half_a, half_b) = cal.streams.split_at(cal.streams.len() / 2);
    let mut merged =
        calibrate_with_gate(half_a, &cal.statics, LengthBins::standard(), gate, &opts);
    let shard_b = calibrate_with_gate(half_b, &cal.statics, LengthBins::standard(), gate, &opts);
    merged.merge(&shard_b).unwrap();

    use aistrack::quantiles::Metric;
    let mut exact: BTreeMap<Metric, Vec<f64>> = BTreeMap::new();
    for stream in &cal.streams {
        for pair in stream.messages.windows(2) {
            let pm = pair_metrics(&pair[0], &pair[1]).unwrap();
            exact.entry(Metric::Dt).or_default().push(pm.dt);
            if pm.dt <= gate {
                exact.entry(Metric::DsogAbs).or_default().push(pm.dsog.abs());
                exact.entry(Metric::Rot).or_default().push(pm.rot);
                exact.entry(Metric::Dist).or_default().push(pm.dist);
                exact.entry(Metric::SpeedGap).or_default().push(pm.speed_gap);
            }
        }
    }
    for (metric, values) in exact.iter_mut() {
        values.sort_unstable_by(f64::total_cmp);
        for &p in &grid {
            let estimate = merged.quantile(*metric, None, p).unwrap();
            let err = rank_error(values, p, estimate);
            assert!(err <= 0.005, "merged table: metric {metric:?} rank error {err} at p={p}");
        }
    }

    assert!(start.elapsed().as_secs_f64() < 30.0, "criterion 2 over budget");
}

struct CalibratedFleet {
    table: aistrack::QuantileTable,
    thresholds: Vec<aistrack::SplitThresholds>,
}

fn calibrated_fleet(alpha: f64) -> CalibratedFleet {
    let cal = fleet::build(&CALIBRATION, &[]);
    let table = calibrate(
        &cal.streams,
        &cal.statics,
        LengthBins::standard(),
        &CalibrateOptions::default(),
    )
    .unwrap();
    let thresholds = fleet::vessel_specs()
        .iter()
        .map(|spec| table.thresholds(Some(spec.length_m), alpha).unwrap())
        .collect();
    CalibratedFleet { table, thresholds }
}

/// Criterion 3: on a 10,000-message fleet with 50 injected anomalies, the
/// split detector recovers exactly the injected indices.
#[test]
fn criterion_03_split_point_soundness() {
    let start = Instant::now();
    let calibrated = calibrated_fleet(0.05);
    let specs = fleet::vessel_specs();

    let plan = fleet::plan_injections(&specs, &calibrated.thresholds, 10, &TEST_FLEET);
    assert_eq!(plan.len(), 50);
    let test = fleet::build(&TEST_FLEET, &plan);
    let total: usize = test.streams.iter().map(|s| s.messages.len()).sum();
    assert_eq!(total, 10_000);

    // Every injected pair must violate exactly its intended condition.
    for inj in &plan {
        let stream = &test.streams[inj.vessel];
        let th = &calibrated.thresholds[inj.vessel];
        let pair = (&stream.messages[inj.step - 1], &stream.messages[inj.step]);
        let pm = pair_metrics(pair.0, pair.1).unwrap();
        let fired = [
            (InjectionKind::SpeedJump, pm.dsog > th.speed_change),
            (
                InjectionKind::CourseSpike,
                pm.rot < th.turn_rate.0 || pm.rot > th.turn_rate.1,
            ),
            (InjectionKind::TimeGap, pm.dt > th.time_gap),
            (InjectionKind::DistanceJump, pm.dist > th.distance),
            (
                InjectionKind::SpeedGapOutlier,
                pm.speed_gap < th.speed_gap.0 || pm.speed_gap > th.speed_gap.1,
            ),
        ];
        for (kind, fired) in fired {
            assert_eq!(
                fired,
                kind == inj.kind,
                "vessel {} step {}: condition {:?} fired={} for injection {:?} ({pm:?})",
                inj.vessel,
                inj.step,
                kind,
                fired,
                inj.kind
            );
        }
    }

    // Exact recovery: precision = recall = 1.
    let mut found_total = 0usize;
    for (v, stream) in test.streams.iter().enumerate() {
        let found = find_split_points(stream, &calibrated.thresholds[v]);
        assert_eq!(
            found, test.expected_splits[v],
            "vessel {v}: detected splits differ from injections"
        );
        found_total += found.len();
    }
    assert_eq!(found_total, 50);

    assert!(start.elapsed().as_secs_f64() < 5.0, "criterion 3 over budget");
}

/// Criterion 4: after extraction no emitted pair violates any condition, and
/// split counts are monotone in alpha.
#[test]
fn criterion_04_post_split_invariant_and_alpha_monotonicity() {
    let calibrated = calibrated_fleet(0.05);
    let specs = fleet::vessel_specs();
    let plan = fleet::plan_injections(&specs, &calibrated.thresholds, 10, &TEST_FLEET);
    let test = fleet::build(&TEST_FLEET, &plan);

    let mut split_counts = Vec::new();
    let mut split_sets: Vec<Vec<std::collections::BTreeSet<usize>>> = Vec::new();
    for alpha in [0.01, 0.05, 0.1] {
        let extraction =
            extract_all(&test.streams, &test.statics, Some(&calibrated.table), alpha, false)
                .unwrap();
        for ship in extraction.ships.values() {
            let length = ship.static_info.and_then(|s| s.ship_length);
            let th = calibrated.table.thresholds(length, alpha).unwrap();
            for traj in &ship.trajectories {
                for pair in traj.messages.windows(2) {
                    assert!(
                        !is_split_pair(&pair[0], &pair[1], &th),
                        "alpha {alpha}: emitted trajectory still violates a condition"
                    );
                }
            }
        }
        split_counts.push(extraction.stats.split_points);
        split_sets.push(
            test.streams
                .iter()
                .map(|stream| {
                    let length = test.statics[&stream.mmsi].ship_length;
                    let th = calibrated.table.thresholds(length, alpha).unwrap();
                    find_split_points(stream, &th)
                })
                .collect(),
        );
    }
    assert!(
        split_counts[0] <= split_counts[1] && split_counts[1] <= split_counts[2],
        "split counts not monotone in alpha: {split_counts:?}"
    );
    // Nested thresholds give nested split sets, per vessel.
    for window in split_sets.windows(2) {
        for (narrow, wide) in window[0].iter().zip(&window[1]) {
            assert!(narrow.is_subset(wide), "split sets not nested across alpha");
        }
    }
}

/// Criterion 5: a clean stream with one teleported outlier collapses back to
/// a single trajectory with the outlier absent and everything else kept.
#[test]
fn criterion_05_rejoin_fidelity() {
    let calibrated = calibrated_fleet(0.05);
    let clean = fleet::build(&TEST_FLEET, &[]);

    // A fast vessel (index 11) with a mid-stream positional outlier.
    let vessel = 11usize;
    let mut stream = clean.streams[vessel].clone();
    let n = stream.messages.len();
    let th = &calibrated.thresholds[vessel];
    let jump_deg = 5.0 * th.distance * 1852.0 * 180.0
        / (geo::EARTH_RADIUS_M * std::f64::consts::PI);
    let outlier_lat = stream.messages[n / 2].lat.unwrap() + jump_deg;
    stream.messages[n / 2].lat = Some(outlier_lat);

    let outcome = split(&stream, th);
    assert_eq!(outcome.dropped.len(), 1, "exactly the outlier is isolated");
    assert_eq!(outcome.dropped[0].lat, Some(outlier_lat));
    let (rejoined, merges) = rejoin(outcome.trajectories, th);
    assert_eq!(merges, 1);
    assert_eq!(rejoined.len(), 1, "neighbors rejoin into one trajectory");
    assert_eq!(rejoined[0].messages.len(), n - 1);
    assert!(rejoined[0].messages.iter().all(|m| m.lat != Some(outlier_lat)));

    // Conservation: emitted plus dropped equals input.
    let emitted: usize = rejoined.iter().map(|t| t.messages.len()).sum();
    assert_eq!(emitted + outcome.dropped.len(), n);
}

/// O(n³) hull oracle: an edge (i, j) is on the hull iff every other point
/// lies strictly to its left; walking those edges gives the polygon.
fn brute_force_hull_area(points: &[(f64, f64)]) -> f64 {
    let n = points.len();
    let mut next: BTreeMap<usize, usize> = BTreeMap::new();
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let mut all_left = true;
            for (k, p) in points.iter().enumerate() {
                if k == i || k == j {
                    continue;
                }
                let cross = (points[j].0 - points[i].0) * (p.1 - points[i].1)
                    - (points[j].1 - points[i].1) * (p.0 - points[i].0);
                if cross <= 0.0 {
                    all_left = false;
                    break;
                }
            }
            if all_left {
                next.insert(i, j);
            }
        }
    }
    let Some((&start, _)) = next.iter().next() else {
        return 0.0;
    };
    let mut ordered = vec![points[start]];
    let mut cursor = next[&start];
    while cursor != start {
        ordered.push(points[cursor]);
        cursor = next[&cursor];
    }
    polygon_area(&ordered)
}

/// Criterion 6: geometry against analytic arcs, a brute-force hull, and the
/// planar-vs-spherical distance bound.
#[test]
fn criterion_06_geometry_oracles() {
    // Analytic arcs at 1e-9 relative.
    let quarter = geo::haversine(0.0, 0.0, 0.0, 90.0);
    let expect_quarter = std::f64::consts::PI * geo::EARTH_RADIUS_M / 2.0;
    assert!((quarter - expect_quarter).abs() / expect_quarter < 1e-9);
    let half = geo::haversine(0.0, 0.0, 0.0, 180.0);
    let expect_half = std::f64::consts::PI * geo::EARTH_RADIUS_M;
    assert!((half - expect_half).abs() / expect_half < 1e-9);

    // Quickhull vs the O(n³) oracle on 200 random 50-point sets.
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for set in 0..200 {
        let points: Vec<(f64, f64)> = (0..50)
            .map(|_| (rng.gen_range(0.0..10_000.0), rng.gen_range(0.0..10_000.0)))
            .collect();
        let fast = polygon_area(&convex_hull(&points));
        let brute = brute_force_hull_area(&points);
        assert!(
            (fast - brute).abs() / brute.max(1e-12) < 1e-9,
            "set {set}: {fast} vs {brute}"
        );
    }

    // Planar distances within 0.1% of the great circle on sub-50 km pairs.
    for _ in 0..500 {
        let zone = rng.gen_range(1u8..=60);
        let lon0 = f64::from(zone) * 6.0 - 183.0 + rng.gen_range(-1.5..1.5);
        let lat0 = rng.gen_range(-70.0..70.0);
        let lat1 = lat0 + rng.gen_range(-0.2..0.2);
        let lon1 = lon0 + rng.gen_range(-0.2..0.2);
        let arc = geo::haversine(lat0, lon0, lat1, lon1);
        if !(100.0..=50_000.0).contains(&arc) {
            continue;
        }
        let a = geo::to_utm_zoned(lat0, lon0, zone).unwrap();
        let b = geo::to_utm_zoned(lat1, lon1, zone).unwrap();
        let planar = ((a.easting - b.easting).powi(2) + (a.northing - b.northing).powi(2)).sqrt();
        assert!((planar - arc).abs() / arc < 1e-3, "{planar} vs {arc}");
    }
}

fn traj_from_positions(positions: &[(f64, f64)]) -> Trajectory {
    let messages: Vec<AisMessage> = positions
        .iter()
        .enumerate()
        .map(|(i, &(lat, lon))| AisMessage {
            recv_time: i as f64 * 10.0,
            mmsi: 1,
            msg_type: 1,
            lat: Some(lat),
            lon: Some(lon),
            sog: Some(8.0),
            cog: Some(0.0),
            originator: None,
        })
        .collect();
    let n = messages.len();
    Trajectory { mmsi: 1, messages, source_span: (0, n) }
}

/// Criterion 7: the course-change laws and the antitone mapping.
#[test]
fn criterion_07_course_change_laws() {
    let collinear = traj_from_positions(&[(55.0, 10.0), (55.0, 10.1), (55.0, 10.2), (55.0, 10.3)]);
    assert!(avg_abs_course_change(&collinear).unwrap().abs() < 1e-9);

    let right_angles = traj_from_positions(&[
        (55.0, 10.0),
        (55.0, 10.1),
        (55.1, 10.1),
        (55.1, 10.2),
        (55.2, 10.2),
    ]);
    assert!((avg_abs_course_change(&right_angles).unwrap() - 90.0).abs() < 1e-9);

    let out_and_back =
        traj_from_positions(&[(55.0, 10.0), (55.0, 10.1), (55.0, 10.0), (55.0, 10.1)]);
    assert!((avg_abs_course_change(&out_and_back).unwrap() - 180.0).abs() < 1e-9);

    // Antitone over a 101-point grid of mean cosines.
    let mut previous = f64::INFINITY;
    for i in 0..=100 {
        let c = -1.0 + f64::from(i) * 0.02;
        let delta = course_change_from_complexity(c);
        assert!((0.0..=180.0).contains(&delta));
        assert!(delta <= previous + 1e-9, "not antitone at c={c}");
        previous = delta;
    }
    assert!((course_change_from_complexity(-1.0) - 180.0).abs() < 1e-9);
    assert!((course_change_from_complexity(0.0) - 90.0).abs() < 1e-9);
    assert!(course_change_from_complexity(1.0).abs() < 1e-9);
}

fn steady_stream(n: usize, dt: f64, sog: f64) -> MessageStream {
    let deg_per_m = 180.0 / (geo::EARTH_RADIUS_M * std::f64::consts::PI);
    let step = sog * 1852.0 / 3600.0 * dt * deg_per_m;
    let messages = (0..n)
        .map(|i| AisMessage {
            recv_time: i as f64 * dt,
            mmsi: 219_000_009,
            msg_type: 1,
            lat: Some(55.0),
            lon: Some(10.0 + step * i as f64),
            sog: Some(sog),
            cog: Some(90.0),
            originator: None,
        })
        .collect();
    MessageStream { mmsi: 219_000_009, messages }
}

/// Criterion 8: reference-method behavior and the comparison report shape.
#[test]
fn criterion_08_baseline_behavior() {
    // Fixed-threshold splitter: a teleporting time gap fires the 600 s rule
    // and stays split because the derived speed over the gap is huge.
    let mut gap_stream = steady_stream(20, 100.0, 5.0);
    for m in gap_stream.messages.iter_mut().skip(10) {
        m.recv_time += 520.0; // 620 s gap
        m.lat = Some(m.lat.unwrap() + 2.0); // ~120 nm teleport
    }
    let out = split_fixed_thresholds(&gap_stream, None).unwrap();
    assert_eq!(out.split_points, Some(1));
    assert_eq!(out.trajectories.len(), 2);

    // Derived speed above 15 kn splits even with a small time gap.
    let mut fast_stream = steady_stream(20, 100.0, 5.0);
    for m in fast_stream.messages.iter_mut().skip(10) {
        m.lat = Some(m.lat.unwrap() + 0.5); // ~30 nm in 100 s
    }
    let out = split_fixed_thresholds(&fast_stream, None).unwrap();
    assert_eq!(out.split_points, Some(1));

    // Forward scan drops exactly the teleporting message.
    let mut guo_stream = steady_stream(10, 10.0, 8.0);
    let original_lat = guo_stream.messages[4].lat.unwrap();
    guo_stream.messages[4].lat = Some(original_lat + 1.0);
    let filtered = filter_forward_scan(&guo_stream, 2.0, 30.0);
    assert_eq!(filtered.discarded, 1);
    assert_eq!(filtered.trajectories[0].messages.len(), 9);
    assert!(filtered.trajectories[0]
        .messages
        .iter()
        .all(|m| m.lat == Some(original_lat)));

    // The comparison emits all five columns plus witnesses.
    let named = vec![
        ("fixed".to_string(), split_fixed_thresholds(&gap_stream, None).unwrap()),
        ("scan".to_string(), filter_forward_scan(&gap_stream, 2.0, 30.0)),
    ];
    let report = compare(&named);
    let mut csv = Vec::new();
    report.write_csv(&mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    let header = text.lines().next().unwrap();
    for column in [
        "method",
        "discarded_messages",
        "split_points",
        "max_turning_rate_deg_s",
        "max_velocity_change_kn_s",
        "max_distance_nm",
    ] {
        assert!(header.contains(column), "missing column {column}");
    }
    for row in &report.rows {
        assert!(row.max_distance_witness.is_some());
        assert!(row.max_turning_rate_witness.is_some());
        assert!(row.max_velocity_change_witness.is_some());
        assert!(row.max_distance_nm >= 0.0);
    }
}

fn write_raw_day_files(dir: &Path, streams: &[MessageStream]) {
    std::fs::create_dir_all(dir).unwrap();
    let specs = fleet::vessel_specs();
    let mut day1 = String::from("timestamp,message_id,latitude,longitude,raw_message,MMSI,originator\n");
    let mut day2 = day1.clone();
    for stream in streams {
        let half = stream.messages.len() / 2;
        for (k, msg) in stream.messages.iter().enumerate() {
            let raw = oracle::RawDynamic {
                msg_type: 1,
                mmsi: msg.mmsi,
                sog_raw: oracle::sog_to_raw(msg.sog.unwrap()),
                lon_raw: oracle::deg_to_raw(msg.lon.unwrap()),
                lat_raw: oracle::deg_to_raw(msg.lat.unwrap()),
                cog_raw: oracle::cog_to_raw(msg.cog.unwrap()),
            };
            let line = oracle::dynamic_sentence(&raw);
            let row = format!("{},,,,\"{}\",{},DK\n", msg.recv_time, line, msg.mmsi);
            if k < half {
                day1.push_str(&row);
            } else {
                day2.push_str(&row);
            }
        }
    }
    // Static reports ride along in the first day file.
    for (i, spec) in specs.iter().enumerate() {
        let raw = oracle::RawStatic {
            mmsi: spec.mmsi,
            ship_type: spec.ship_type,
            to_bow: (spec.length_m * 0.6).round() as u32,
            to_stern: (spec.length_m * 0.4).round() as u32,
        };
        let (s1, s2) = oracle::static_sentence_pair(&raw, (i % 10) as u8);
        day1.push_str(&format!("1625097600,,,,\"{s1} {s2}\",{},DK\n", spec.mmsi));
    }
    std::fs::write(dir.join("2021_07_01.csv"), day1).unwrap();
    std::fs::write(dir.join("2021_07_02.csv"), day2).unwrap();
}

fn run_binary(args: &[&str]) -> (String, bool) {
    let output = Command::new(env!("CARGO_BIN_EXE_aistrack"))
        .args(args)
        .output()
        .expect("binary runs");
    (String::from_utf8_lossy(&output.stdout).into_owned(), output.status.success())
}

fn snapshot_dir(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(current) = stack.pop() {
        for entry in std::fs::read_dir(&current).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let key = path.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.insert(key, std::fs::read(&path).unwrap());
            }
        }
    }
    out
}

/// Criterion 9: the whole command pipeline is byte-deterministic across two
/// runs, finishes inside the budget, and the decoder sustains the
/// single-threaded throughput floor.
#[test]
fn criterion_09_end_to_end_determinism_and_throughput() {
    let start = Instant::now();
    let calibrated = calibrated_fleet(0.05);
    let plan =
        fleet::plan_injections(&fleet::vessel_specs(), &calibrated.thresholds, 10, &TEST_FLEET);
    let test = fleet::build(&TEST_FLEET, &plan);

    let base = tempfile::tempdir().unwrap();
    let raw_dir = base.path().join("raw");
    write_raw_day_files(&raw_dir, &test.streams);

    let mut summaries: Vec<Vec<String>> = Vec::new();
    let mut snapshots = Vec::new();
    for run in 0..2 {
        let work = base.path().join(format!("run{run}"));
        std::fs::create_dir_all(&work).unwrap();
        let decoded = work.join("decoded");
        let mut run_summaries = Vec::new();

        let (out, ok) = run_binary(&[
            "decode",
            "--source",
            raw_dir.to_str().unwrap(),
            "--dest",
            decoded.to_str().unwrap(),
        ]);
        assert!(ok, "decode failed: {out}");
        run_summaries.push(out);

        let table = work.join("table.json");
        let (out, ok) = run_binary(&[
            "calibrate",
            "--decoded",
            decoded.join("dynamic").to_str().unwrap(),
            "--static",
            decoded.join("static").to_str().unwrap(),
            "--out",
            table.to_str().unwrap(),
        ]);
        assert!(ok, "calibrate failed: {out}");
        run_summaries.push(out);

        let extracted = work.join("extracted");
        let (out, ok) = run_binary(&[
            "extract",
            "--decoded",
            decoded.join("dynamic").to_str().unwrap(),
            "--static",
            decoded.join("static").to_str().unwrap(),
            "--table",
            table.to_str().unwrap(),
            "--alpha",
            "0.05",
            "--out",
            extracted.to_str().unwrap(),
        ]);
        assert!(ok, "extract failed: {out}");
        run_summaries.push(out);

        let assessed = work.join("assessed");
        let (out, ok) = run_binary(&[
            "assess",
            "--input",
            extracted.join("trajectories.csv").to_str().unwrap(),
            "--static",
            decoded.join("static").to_str().unwrap(),
            "--min-msgs",
            "50",
            "--min-hull-area",
            "3e5",
            "--heatmap",
            "500",
            "--out",
            assessed.to_str().unwrap(),
        ]);
        assert!(ok, "assess failed: {out}");
        run_summaries.push(out);

        // Summaries carry the run directory in path fields; strip it before
        // comparing runs.
        let normalized: Vec<String> = run_summaries
            .iter()
            .map(|s| s.replace(&work.to_string_lossy().into_owned(), "<work>"))
            .collect();
        summaries.push(normalized);
        snapshots.push(snapshot_dir(&work));
    }

    assert_eq!(summaries[0], summaries[1], "summaries differ between runs");
    let (a, b) = (&snapshots[0], &snapshots[1]);
    assert_eq!(
        a.keys().collect::<Vec<_>>(),
        b.keys().collect::<Vec<_>>(),
        "output file sets differ"
    );
    for (name, bytes) in a {
        assert_eq!(bytes, &b[name], "output file {name} differs between runs");
    }

    // Throughput floor: 100k type-1 sentences, single-threaded.
    let sentences: Vec<String> = (0..100_000u32)
        .map(|i| {
            oracle::dynamic_sentence(&oracle::RawDynamic {
                msg_type: 1,
                mmsi: 219_000_000 + (i % 1000),
                sog_raw: i % 1023,
                lon_raw: (i as i32 % 100_000) * 600,
                lat_raw: (i as i32 % 50_000) * 600,
                cog_raw: i % 3600,
            })
        })
        .collect();
    let decode_start = Instant::now();
    let mut decoded_count = 0u64;
    for line in &sentences {
        let sentence = decode::parse_sentence(line).unwrap();
        let payload = decode::assemble(std::slice::from_ref(&sentence)).unwrap();
        let msg = decode::decode_dynamic(&payload).unwrap();
        decoded_count += u64::from(msg.msg_type == 1);
    }
    let elapsed = decode_start.elapsed().as_secs_f64();
    assert_eq!(decoded_count, 100_000);
    let rate = 100_000.0 / elapsed;
    assert!(rate >= 100_000.0, "decode throughput {rate:.0}/s below the floor");

    assert!(start.elapsed().as_secs_f64() < 60.0, "criterion 9 over budget");
}

/// Criterion 10: counts reconcile at every stage and the density grid
/// conserves in-bounds positions.
#[test]
fn criterion_10_conservation() {
    let calibrated = calibrated_fleet(0.05);
    let plan =
        fleet::plan_injections(&fleet::vessel_specs(), &calibrated.thresholds, 10, &TEST_FLEET);
    let test = fleet::build(&TEST_FLEET, &plan);

    // Filter stage reconciles.
    let all: Vec<AisMessage> =
        test.streams.iter().flat_map(|s| s.messages.iter().cloned()).collect();
    let n = all.len() as u64;
    let bb = BoundingBox::new(51.85, 60.49, 4.85, 14.3).unwrap();
    let (kept, stats) = filter_messages(all, &bb, 1.0, 30.0);
    assert_eq!(kept.len() as u64 + stats.total(), n);

    // Split stage conserves messages.
    for (v, stream) in test.streams.iter().enumerate() {
        let outcome = split(stream, &calibrated.thresholds[v]);
        let emitted: usize = outcome.trajectories.iter().map(|t| t.messages.len()).sum();
        assert_eq!(emitted + outcome.dropped.len(), stream.messages.len());
    }

    // Density grid conserves in-bounds positions, independent of order.
    let extraction =
        extract_all(&test.streams, &test.statics, Some(&calibrated.table), 0.05, false).unwrap();
    let grid = density_grid(&extraction.ships, &bb, 100);
    let in_bounds: u64 = extraction
        .ships
        .values()
        .flat_map(|s| s.trajectories.iter())
        .flat_map(|t| t.messages.iter())
        .filter(|m| geo::in_bounds(m, &bb))
        .count() as u64;
    assert_eq!(grid.total(), in_bounds);
}
