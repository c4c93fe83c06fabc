//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails or exceeds its time budget.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::{Duration, Instant};

use magfp::bench::benchmark;
use magfp::formats;
use magfp_core::features::GRAVITY_EPS;
use magfp_core::synthetic::{random_warp_ops, warp_replay};
use magfp_core::{
    dtw_distance, dtw_match, enumerate_windows, evaluate_workload, extract_features_aligned,
    extract_features_projected, feature_distance, generate_survey, path_match, Algorithm,
    DtwParams, FeatureVec, FieldModel, FingerprintMap, Floor, MatchParams, Selection, SensorSample,
    SurveyParams, Vec3, Window,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const WINDOW: usize = 20;

fn paper_map(seed: u64) -> FingerprintMap {
    let model = FieldModel::for_floor(Floor::default(), seed);
    generate_survey(&model, SurveyParams::paper_shape(), seed).expect("paper-shaped survey")
}

fn all_windows(map: &FingerprintMap) -> Vec<Window> {
    enumerate_windows(map, WINDOW, true).unwrap().windows
}

fn params() -> MatchParams {
    MatchParams {
        window: WINDOW,
        include_reversed: true,
        dtw: DtwParams::default(),
    }
}

type Outcome = Result<String, String>;
type Criterion = (&'static str, Duration, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

/// 1. Window counts on paper-shaped maps.
fn windowing_arithmetic() -> Outcome {
    for seed in [1u64, 42, 2024] {
        let map = paper_map(seed);
        let lens: Vec<usize> = map.paths.iter().map(|p| p.len()).collect();
        ensure!(lens.len() == 24, "seed {seed}: {} paths", lens.len());
        ensure!(
            lens.iter().sum::<usize>() == 1024,
            "seed {seed}: total {}",
            lens.iter().sum::<usize>()
        );
        ensure!(
            lens.iter().all(|l| (20..=50).contains(l)),
            "seed {seed}: length out of range"
        );
        let t0 = Instant::now();
        let fwd = enumerate_windows(&map, WINDOW, false)
            .unwrap()
            .windows
            .len();
        let both = enumerate_windows(&map, WINDOW, true).unwrap().windows.len();
        ensure!(
            t0.elapsed() < Duration::from_secs(1),
            "enumeration took {:?}",
            t0.elapsed()
        );
        ensure!(
            fwd == 568 && both == 1136,
            "seed {seed}: {fwd} forward / {both} total"
        );
    }
    Ok("568 forward, 1136 with reversal on 3 seeded maps".into())
}

/// 2. Pythagorean identity and cart-condition equality.
fn feature_identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for i in 0..100_000 {
        let v = |rng: &mut ChaCha8Rng, r: f64| {
            Vec3::new(
                rng.random_range(-r..r),
                rng.random_range(-r..r),
                rng.random_range(-r..r),
            )
        };
        let s = SensorSample {
            timestamp_us: i,
            mag: v(&mut rng, 150.0),
            acc: v(&mut rng, 20.0),
            gyro: Vec3::default(),
        };
        if s.acc.norm() <= GRAVITY_EPS {
            continue;
        }
        let f = extract_features_projected(&s).unwrap();
        let m2 = s.mag.dot(s.mag);
        let rel = (f.mv * f.mv + f.mh * f.mh - m2).abs() / m2;
        worst = worst.max(rel);
        ensure!(rel <= 1e-9, "sample {i}: relative residual {rel:e}");
        ensure!(f.mh >= 0.0, "sample {i}: negative mh");

        let cart = SensorSample {
            acc: Vec3::new(0.0, 0.0, rng.random_range(0.5..20.0)),
            ..s
        };
        let p = extract_features_projected(&cart).unwrap();
        let a = extract_features_aligned(&cart);
        ensure!(
            p == a,
            "sample {i}: projected {p:?} != aligned {a:?} under a=(0,0,g)"
        );
    }
    Ok(format!(
        "1e5 samples, worst relative residual {worst:.1e}, cart condition exact"
    ))
}

/// Minimum cost over every monotone warping path, enumerated recursively.
fn brute_force_dtw(a: &[FeatureVec], b: &[FeatureVec], i: usize, j: usize) -> f64 {
    let here = feature_distance(a[i], b[j]);
    if i + 1 == a.len() && j + 1 == b.len() {
        return here;
    }
    let mut rest = f64::INFINITY;
    if i + 1 < a.len() {
        rest = rest.min(brute_force_dtw(a, b, i + 1, j));
    }
    if j + 1 < b.len() {
        rest = rest.min(brute_force_dtw(a, b, i, j + 1));
    }
    if i + 1 < a.len() && j + 1 < b.len() {
        rest = rest.min(brute_force_dtw(a, b, i + 1, j + 1));
    }
    here + rest
}

/// 3. DTW against the exhaustive warping-path oracle.
fn dtw_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let seq = |rng: &mut ChaCha8Rng| -> Vec<FeatureVec> {
        let n = rng.random_range(1..=6);
        (0..n)
            .map(|_| FeatureVec::new(rng.random_range(-60.0..60.0), rng.random_range(0.0..60.0)))
            .collect()
    };
    let mut worst = 0.0f64;
    for k in 0..1000 {
        let a = seq(&mut rng);
        let b = seq(&mut rng);
        let fast = dtw_distance(&a, &b, DtwParams::default()).unwrap();
        let slow = brute_force_dtw(&a, &b, 0, 0);
        let diff = (fast - slow).abs();
        worst = worst.max(diff);
        ensure!(diff <= 1e-12, "pair {k}: dp {fast} vs brute force {slow}");
    }
    Ok(format!("1000 pairs, max |dp - brute force| = {worst:e}"))
}

/// 4. Exact replays position with zero error.
fn self_replay_zero_error() -> Outcome {
    let map = paper_map(42);
    let targets = all_windows(&map);
    let mut notes = Vec::new();
    for alg in [Algorithm::Path, Algorithm::Dtw] {
        let r = evaluate_workload(&map, &targets, alg, params()).map_err(|e| e.to_string())?;
        ensure!(
            r.per_case.len() == 1136,
            "{alg}: {} cases",
            r.per_case.len()
        );
        ensure!(r.mean == 0.0, "{alg}: mean error {}", r.mean);
        notes.push(format!("{alg} mean {:.3} m", r.mean));
    }
    Ok(format!("1136 replayed windows; {}", notes.join(", ")))
}

/// 5. Two far-apart feature twins break point matching but not windows.
fn point_aliasing() -> Outcome {
    let mut map = paper_map(42);
    // twin A: first point of the lowest path; twin B: the path start farthest from it
    let a = map.paths[0].points[0];
    let (bi, b) = map
        .paths
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, p)| (i, p.points[0]))
        .max_by(|x, y| a.pos.distance(x.1.pos).total_cmp(&a.pos.distance(y.1.pos)))
        .unwrap();
    ensure!(b.point_id > a.point_id, "twin order");
    let separation = a.pos.distance(b.pos);
    map.paths[bi].points[0].feat = a.feat;

    let targets = all_windows(&map);
    let point =
        evaluate_workload(&map, &targets, Algorithm::Point, params()).map_err(|e| e.to_string())?;
    ensure!(
        (point.quartiles.max - separation).abs() <= 1e-12,
        "point max error {} != separation {separation}",
        point.quartiles.max
    );
    for alg in [Algorithm::Path, Algorithm::Dtw] {
        let r = evaluate_workload(&map, &targets, alg, params()).map_err(|e| e.to_string())?;
        ensure!(
            r.quartiles.max == 0.0,
            "{alg}: max error {}",
            r.quartiles.max
        );
    }
    Ok(format!(
        "twins {separation:.2} m apart: point max error {:.2} m, path/dtw max 0",
        point.quartiles.max
    ))
}

/// 6. DTW is the slowest matcher by a wide margin.
fn timing_ordering() -> Outcome {
    let map = paper_map(42);
    let targets: Vec<Vec<FeatureVec>> = all_windows(&map).into_iter().map(|w| w.feats).collect();
    let r = benchmark(&map, &targets, &Algorithm::ALL, params(), 3, false)
        .map_err(|e| e.to_string())?;
    let t = |a| r.seconds(a).unwrap();
    let (point, path, dtw) = (t(Algorithm::Point), t(Algorithm::Path), t(Algorithm::Dtw));
    ensure!(point > 0.0 && path > 0.0 && dtw > 0.0, "non-positive time");
    ensure!(
        dtw > point && dtw > path,
        "dtw {dtw}s is not the slowest (point {point}s, path {path}s)"
    );
    ensure!(dtw >= 5.0 * path, "dtw {dtw}s < 5 x path {path}s");
    Ok(format!(
        "point {point:.3}s, path {path:.3}s, dtw {dtw:.3}s (dtw/path = {:.1}x)",
        dtw / path
    ))
}

/// 7. DTW recovers time-warped, noisy replays; path matching mostly does not.
fn warp_tolerance() -> Outcome {
    let map = paper_map(42);
    let windows = all_windows(&map);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut dtw_hits, mut path_hits) = (0, 0);
    for case in 0..100u64 {
        let src = &windows[rng.random_range(0..windows.len())];
        let count = rng.random_range(1..=3);
        let ops = random_warp_ops(WINDOW, count, 1000 + case);
        let target = warp_replay(src, &ops, 0.5, 5000 + case).map_err(|e| e.to_string())?;

        let d =
            dtw_match(&target.feats, &windows, DtwParams::default()).map_err(|e| e.to_string())?;
        dtw_hits += usize::from(d.selection == Selection::Window(src.id));

        // path matching needs M samples: trim the surplus or hold the last one
        let mut fitted = target.feats.clone();
        fitted.resize(WINDOW, *target.feats.last().unwrap());
        let p = path_match(&fitted, &windows).map_err(|e| e.to_string())?;
        path_hits += usize::from(p.selection == Selection::Window(src.id));
    }
    ensure!(dtw_hits >= 90, "dtw recovered only {dtw_hits}/100");
    ensure!(
        dtw_hits > path_hits,
        "dtw {dtw_hits} not above path {path_hits}"
    );
    Ok(format!(
        "true window recovered: dtw {dtw_hits}/100, path {path_hits}/100"
    ))
}

/// 8. Seeded CLI runs are byte-identical and maps round-trip.
fn determinism_round_trip() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let d = dir.path();
    let run = |args: &[&str]| -> Result<(), String> {
        let out = Command::new(env!("CARGO_BIN_EXE_magfp"))
            .current_dir(d)
            .env_remove("MAGFP_OUT_DIR")
            .args(args)
            .output()
            .map_err(|e| e.to_string())?;
        ensure!(
            out.status.success(),
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        Ok(())
    };
    for tag in ["a", "b"] {
        let dir = format!("run_{tag}");
        run(&[
            "--out-dir",
            &dir,
            "synth",
            "--paper-shape",
            "--seed",
            "42",
            "--out",
            "map.csv",
            "--targets-out",
            "targets.csv",
            "--reversed",
            "--random-warp",
            "3",
            "--noise",
            "0.5",
            "--logs-out",
            "logs",
        ])?;
        // path matching rejects warped targets of the wrong length
        for alg in ["point", "dtw"] {
            run(&[
                "--out-dir",
                &dir,
                "match",
                "--map",
                &format!("{dir}/map.csv"),
                "--targets",
                &format!("{dir}/targets.csv"),
                "--algorithm",
                alg,
                "--reversed",
                "--parallel",
                "--out",
                &format!("{alg}.json"),
            ])?;
        }
        run(&[
            "--out-dir",
            &dir,
            "synth",
            "--paper-shape",
            "--seed",
            "42",
            "--out",
            "map2.csv",
            "--targets-out",
            "replay.csv",
            "--reversed",
        ])?;
        run(&[
            "--out-dir",
            &dir,
            "match",
            "--map",
            &format!("{dir}/map2.csv"),
            "--targets",
            &format!("{dir}/replay.csv"),
            "--algorithm",
            "path",
            "--reversed",
            "--out",
            "replay.json",
        ])?;
        run(&[
            "--out-dir",
            &dir,
            "evaluate",
            "--results",
            &format!("{dir}/replay.json"),
            "--truth",
            &format!("{dir}/replay.csv"),
            "--out",
            "report.json",
            "--heatmap",
            "heat.csv",
        ])?;
    }
    let mut compared = 0;
    for entry in walk(&d.join("run_a")) {
        let rel = entry.strip_prefix(d.join("run_a")).unwrap();
        let a = fs::read(&entry).map_err(|e| e.to_string())?;
        let b =
            fs::read(d.join("run_b").join(rel)).map_err(|e| format!("{}: {e}", rel.display()))?;
        ensure!(a == b, "{} differs between runs", rel.display());
        compared += 1;
    }

    let map =
        formats::read_map(fs::File::open(d.join("run_a/map.csv")).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
    ensure!(
        map == paper_map(42),
        "loaded CLI map differs from the library map"
    );
    let mut buf = Vec::new();
    formats::write_map(&mut buf, &map).map_err(|e| e.to_string())?;
    let back = formats::read_map(buf.as_slice()).map_err(|e| e.to_string())?;
    ensure!(back == map, "save/load round trip changed the map");
    Ok(format!(
        "{compared} output files byte-identical across two runs; map round-trips"
    ))
}

fn walk(dir: &std::path::Path) -> Vec<std::path::PathBuf> {
    let mut out = Vec::new();
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            out.extend(walk(&p));
        } else {
            out.push(p);
        }
    }
    out.sort();
    out
}

fn main() {
    let criteria: [Criterion; 8] = [
        (
            "1 windowing arithmetic",
            Duration::from_secs(1),
            windowing_arithmetic,
        ),
        (
            "2 feature identities",
            Duration::from_secs(5),
            feature_identities,
        ),
        (
            "3 dtw oracle equivalence",
            Duration::from_secs(10),
            dtw_oracle,
        ),
        (
            "4 self-replay zero error",
            Duration::from_secs(60),
            self_replay_zero_error,
        ),
        (
            "5 point-matching aliasing",
            Duration::from_secs(10),
            point_aliasing,
        ),
        (
            "6 timing ordering",
            Duration::from_secs(300),
            timing_ordering,
        ),
        (
            "7 dtw time-warp tolerance",
            Duration::from_secs(300),
            warp_tolerance,
        ),
        (
            "8 determinism & round-trip",
            Duration::from_secs(30),
            determinism_round_trip,
        ),
    ];
    let mut failed = 0;
    for (name, budget, f) in criteria {
        let t0 = Instant::now();
        let outcome =
            catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".to_string()));
        let elapsed = t0.elapsed();
        let outcome = match outcome {
            Ok(_) if elapsed > budget => Err(format!("took {elapsed:?}, budget {budget:?}")),
            o => o,
        };
        match outcome {
            Ok(msg) => println!(
                "[PASS] criterion {name}: {msg} ({:.2}s)",
                elapsed.as_secs_f64()
            ),
            Err(msg) => {
                failed += 1;
                println!(
                    "[FAIL] criterion {name}: {msg} ({:.2}s)",
                    elapsed.as_secs_f64()
                );
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}
