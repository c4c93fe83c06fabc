//! Seeded synthetic magnetic fields and surveys.
//!
//! Stands in for a real site survey: a set of point sources over a constant
//! background produces a smooth, position-dependent (mv, mh) field, and
//! surveys lay non-overlapping straight or L-shaped paths on the floor.
//! Every output is a pure function of its inputs and seed.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::ToString;
use alloc::vec::Vec;
use core::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::features::Marker;
use crate::matching::feature_distance;
use crate::model::{FeatureVec, Pos2, RefPath, SensorSample, Vec3, Window};
use crate::store::{build_map, FingerprintMap};

/// Softening added to the squared source distance, m².
pub const SOFTENING_M2: f64 = 0.25;
/// Closest allowed approach to a source, meters.
pub const MIN_SOURCE_DISTANCE_M: f64 = 0.05;
/// Standard gravity used for synthesized accelerometer readings.
pub const STANDARD_GRAVITY: f64 = 9.80665;
/// Default background field, µT.
pub const DEFAULT_BACKGROUND: FeatureVec = FeatureVec::new(46.0, 30.0);

const MAX_ATTEMPTS: u64 = 64;
const CELL_MARGIN_M: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub enum SyntheticError {
    SourceCollision {
        source: usize,
    },
    FloorOverflow {
        paths: usize,
        capacity: usize,
    },
    InvalidParams(&'static str),
    DegenerateWindow(&'static str),
    /// No layout without source collisions or feature twins was found.
    AttemptsExhausted,
}

impl fmt::Display for SyntheticError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SyntheticError::SourceCollision { source } => write!(
                f,
                "position within {MIN_SOURCE_DISTANCE_M} m of source {source}"
            ),
            SyntheticError::FloorOverflow { paths, capacity } => write!(
                f,
                "{paths} paths requested but the floor fits only {capacity}"
            ),
            SyntheticError::InvalidParams(why) => write!(f, "invalid parameters: {why}"),
            SyntheticError::DegenerateWindow(why) => write!(f, "degenerate window: {why}"),
            SyntheticError::AttemptsExhausted => {
                write!(f, "no valid survey layout after {MAX_ATTEMPTS} attempts")
            }
        }
    }
}

impl core::error::Error for SyntheticError {}

/// A rectangular floor `[0, width] × [0, height]`, meters.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Floor {
    pub width_m: f64,
    pub height_m: f64,
}

impl Floor {
    #[allow(missing_docs)]
    pub fn contains(&self, p: Pos2) -> bool {
        (0.0..=self.width_m).contains(&p.x) && (0.0..=self.height_m).contains(&p.y)
    }
}

impl Default for Floor {
    fn default() -> Self {
        Self {
            width_m: 100.0,
            height_m: 70.0,
        }
    }
}

/// A magnetized object. `strength` (µT·m², may be negative) is split into a
/// vertical share `vertical_fraction` and a horizontal remainder.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Source {
    pub pos: Pos2,
    pub strength: f64,
    pub vertical_fraction: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FieldModel {
    pub sources: Vec<Source>,
    pub background: FeatureVec,
    pub floor: Floor,
    pub seed: u64,
}

impl FieldModel {
    /// A field with no sources: the background everywhere.
    pub fn uniform(background: FeatureVec, floor: Floor) -> Self {
        Self {
            sources: Vec::new(),
            background,
            floor,
            seed: 0,
        }
    }

    /// `n_sources` sources scattered uniformly over `floor`, with strengths of
    /// 80..400 µT·m² in magnitude and random sign.
    pub fn random(floor: Floor, n_sources: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sources = (0..n_sources)
            .map(|_| {
                let pos = Pos2::new(
                    rng.random_range(0.0..=floor.width_m),
                    rng.random_range(0.0..=floor.height_m),
                );
                let magnitude = rng.random_range(80.0..400.0);
                let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                Source {
                    pos,
                    strength: sign * magnitude,
                    vertical_fraction: rng.random_range(0.0..=1.0),
                }
            })
            .collect();
        Self {
            sources,
            background: DEFAULT_BACKGROUND,
            floor,
            seed,
        }
    }

    /// The default source density used for generated sites: one source per
    /// 12 m² of floor.
    pub fn for_floor(floor: Floor, seed: u64) -> Self {
        let n = libm::ceil(floor.width_m * floor.height_m / 12.0) as usize;
        Self::random(floor, n, seed)
    }
}

/// Field features at `pos`. Each source adds `strength/(d² + 0.25)`, split
/// between the vertical and horizontal components by its vertical fraction.
pub fn field_at(model: &FieldModel, pos: Pos2) -> Result<FeatureVec, SyntheticError> {
    let mut mv = model.background.mv;
    let mut mh = model.background.mh;
    for (i, s) in model.sources.iter().enumerate() {
        let dx = pos.x - s.pos.x;
        let dy = pos.y - s.pos.y;
        let d2 = dx * dx + dy * dy;
        if d2 < MIN_SOURCE_DISTANCE_M * MIN_SOURCE_DISTANCE_M {
            return Err(SyntheticError::SourceCollision { source: i });
        }
        let contrib = s.strength / (d2 + SOFTENING_M2);
        mv += s.vertical_fraction * contrib;
        mh += (1.0 - s.vertical_fraction) * contrib;
    }
    Ok(FeatureVec::new(mv, libm::fabs(mh)))
}

/// Shape of a generated survey.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SurveyParams {
    pub n_paths: usize,
    pub min_len: usize,
    pub max_len: usize,
    /// Exact total point count; path lengths are adjusted to hit it.
    pub total_points: Option<usize>,
    pub spacing_m: f64,
}

impl SurveyParams {
    /// 24 paths of 20..=50 points, 1024 points in total, 0.30 m apart.
    pub fn paper_shape() -> Self {
        Self {
            n_paths: 24,
            min_len: 20,
            max_len: 50,
            total_points: Some(1024),
            spacing_m: 0.30,
        }
    }

    fn check(&self) -> Result<(), SyntheticError> {
        if self.n_paths == 0 {
            return Err(SyntheticError::InvalidParams("n_paths must be at least 1"));
        }
        if self.min_len < 2 || self.max_len > 10_000 || self.min_len > self.max_len {
            return Err(SyntheticError::InvalidParams(
                "length range must lie within [2, 10000]",
            ));
        }
        if !(self.spacing_m > 0.0 && self.spacing_m.is_finite()) {
            return Err(SyntheticError::InvalidParams("spacing must be positive"));
        }
        if let Some(t) = self.total_points {
            if t < self.n_paths * self.min_len || t > self.n_paths * self.max_len {
                return Err(SyntheticError::InvalidParams(
                    "total points unreachable with the length range",
                ));
            }
        }
        Ok(())
    }
}

fn draw_lengths(p: &SurveyParams, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut lens: Vec<usize> = (0..p.n_paths)
        .map(|_| rng.random_range(p.min_len..=p.max_len))
        .collect();
    if let Some(total) = p.total_points {
        let mut sum: usize = lens.iter().sum();
        while sum != total {
            let i = rng.random_range(0..lens.len());
            if sum < total && lens[i] < p.max_len {
                lens[i] += 1;
                sum += 1;
            } else if sum > total && lens[i] > p.min_len {
                lens[i] -= 1;
                sum -= 1;
            }
        }
    }
    lens
}

/// Unit steps of a straight or L-shaped polyline of `len` points.
fn path_shape(len: usize, rng: &mut ChaCha8Rng) -> Vec<(i64, i64)> {
    const DIRS: [(i64, i64); 4] = [(1, 0), (0, 1), (-1, 0), (0, -1)];
    let d0 = rng.random_range(0..4usize);
    let turn_at = if len > 3 && rng.random_bool(0.5) {
        Some(rng.random_range(1..len - 1))
    } else {
        None
    };
    let d1 = (d0 + if rng.random_bool(0.5) { 1 } else { 3 }) % 4;
    let mut cur = (0i64, 0i64);
    let mut out = Vec::with_capacity(len);
    out.push(cur);
    for k in 1..len {
        let d = match turn_at {
            Some(t) if k > t => DIRS[d1],
            _ => DIRS[d0],
        };
        cur = (cur.0 + d.0, cur.1 + d.1);
        out.push(cur);
    }
    out
}

type PathSpec = (u32, Vec<(Pos2, FeatureVec)>);

fn layout(
    model: &FieldModel,
    p: &SurveyParams,
    seed: u64,
) -> Result<Vec<PathSpec>, SyntheticError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lens = draw_lengths(p, &mut rng);

    let cell = (p.max_len - 1) as f64 * p.spacing_m + 2.0 * CELL_MARGIN_M;
    let cols = libm::floor(model.floor.width_m / cell) as usize;
    let rows = libm::floor(model.floor.height_m / cell) as usize;
    let capacity = cols * rows;
    if p.n_paths > capacity {
        return Err(SyntheticError::FloorOverflow {
            paths: p.n_paths,
            capacity,
        });
    }
    let mut cells: Vec<(usize, usize)> = (0..rows)
        .flat_map(|r| (0..cols).map(move |c| (c, r)))
        .collect();
    cells.shuffle(&mut rng);

    let inner = cell - 2.0 * CELL_MARGIN_M;
    let mut out = Vec::with_capacity(p.n_paths);
    for (pid, (&len, &(cx, cy))) in lens.iter().zip(&cells).enumerate() {
        let steps = path_shape(len, &mut rng);
        let min_x = steps.iter().map(|s| s.0).min().unwrap_or(0);
        let min_y = steps.iter().map(|s| s.1).min().unwrap_or(0);
        let span_x = (steps.iter().map(|s| s.0).max().unwrap_or(0) - min_x) as f64 * p.spacing_m;
        let span_y = (steps.iter().map(|s| s.1).max().unwrap_or(0) - min_y) as f64 * p.spacing_m;
        let ox = cx as f64 * cell + CELL_MARGIN_M + rng.random_range(0.0..=inner - span_x);
        let oy = cy as f64 * cell + CELL_MARGIN_M + rng.random_range(0.0..=inner - span_y);
        let pts = steps
            .iter()
            .map(|&(sx, sy)| {
                let pos = Pos2::new(
                    ox + (sx - min_x) as f64 * p.spacing_m,
                    oy + (sy - min_y) as f64 * p.spacing_m,
                );
                field_at(model, pos).map(|f| (pos, f))
            })
            .collect::<Result<Vec<_>, _>>()?;
        out.push((pid as u32, pts));
    }
    Ok(out)
}

fn features_distinct(paths: &[(u32, Vec<(Pos2, FeatureVec)>)]) -> bool {
    let feats: Vec<FeatureVec> = paths
        .iter()
        .flat_map(|(_, pts)| pts.iter().map(|p| p.1))
        .collect();
    feats
        .iter()
        .enumerate()
        .all(|(i, &a)| feats[i + 1..].iter().all(|&b| feature_distance(a, b) > 0.0))
}

/// Lays out a survey over `model`'s floor and samples the field at every
/// point. Layouts that hit a source or produce two points with identical
/// features are redrawn from a derived seed.
pub fn generate_survey(
    model: &FieldModel,
    params: SurveyParams,
    seed: u64,
) -> Result<FingerprintMap, SyntheticError> {
    params.check()?;
    for attempt in 0..MAX_ATTEMPTS {
        let paths = match layout(model, &params, seed.wrapping_add(attempt)) {
            Ok(p) => p,
            Err(SyntheticError::SourceCollision { .. }) => continue,
            Err(e) => return Err(e),
        };
        if !features_distinct(&paths) {
            continue;
        }
        let mut map = build_map(paths, params.spacing_m)
            .map_err(|_| SyntheticError::InvalidParams("internal layout produced bad paths"))?;
        map.meta = BTreeMap::from([
            ("generator".to_string(), "synthetic".to_string()),
            ("seed".to_string(), format!("{seed}")),
            ("field_seed".to_string(), format!("{}", model.seed)),
        ]);
        return Ok(map);
    }
    Err(SyntheticError::AttemptsExhausted)
}

/// One edit applied to a replayed window, indexed into the source window.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WarpOp {
    pub index: usize,
    pub kind: WarpKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum WarpKind {
    /// The walker lingered: the sample appears twice.
    Duplicate,
    /// The walker hurried: the sample is missing.
    Drop,
}

/// Replays `window` with time warping and sensor noise. Duplicated indices
/// are emitted twice, dropped ones not at all (the endpoints cannot be
/// dropped); coordinates follow the features. Gaussian noise with standard
/// deviation `noise_ut` is then added to mv and mh, and mh is clamped at 0.
pub fn warp_replay(
    window: &Window,
    ops: &[WarpOp],
    noise_ut: f64,
    seed: u64,
) -> Result<Window, SyntheticError> {
    let n = window.len();
    let mut copies = alloc::vec![1usize; n];
    for op in ops {
        if op.index >= n {
            return Err(SyntheticError::DegenerateWindow("warp index out of range"));
        }
        match op.kind {
            WarpKind::Duplicate => copies[op.index] += 1,
            WarpKind::Drop => {
                if op.index == 0 || op.index == n - 1 {
                    return Err(SyntheticError::DegenerateWindow("cannot drop an endpoint"));
                }
                copies[op.index] = 0;
            }
        }
    }
    if copies.iter().sum::<usize>() < 2 {
        return Err(SyntheticError::DegenerateWindow(
            "fewer than 2 points remain",
        ));
    }
    let noise = if noise_ut == 0.0 {
        None
    } else {
        Some(
            Normal::new(0.0, noise_ut)
                .map_err(|_| SyntheticError::InvalidParams("noise must be finite and >= 0"))?,
        )
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut feats = Vec::new();
    let mut coords = Vec::new();
    for (i, &c) in copies.iter().enumerate() {
        for _ in 0..c {
            let mut f = window.feats[i];
            if let Some(d) = &noise {
                f.mv += d.sample(&mut rng);
                f.mh = (f.mh + d.sample(&mut rng)).max(0.0);
            }
            feats.push(f);
            coords.push(window.coords[i]);
        }
    }
    Ok(Window {
        id: window.id,
        feats,
        coords,
    })
}

/// `count` warp edits on distinct indices of a window of length `len`, each
/// a duplicate or an interior drop with equal odds.
pub fn random_warp_ops(len: usize, count: usize, seed: u64) -> Vec<WarpOp> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx: Vec<usize> = (0..len).collect();
    idx.shuffle(&mut rng);
    let mut ops: Vec<WarpOp> = idx
        .into_iter()
        .take(count)
        .map(|index| {
            let interior = index > 0 && index + 1 < len;
            let kind = if interior && rng.random_bool(0.5) {
                WarpKind::Drop
            } else {
                WarpKind::Duplicate
            };
            WarpOp { index, kind }
        })
        .collect();
    ops.sort_by_key(|o| o.index);
    ops
}

/// Rotates `v` by the unit quaternion `(w, x, y, z)`.
fn rotate(q: (f64, f64, f64, f64), v: Vec3) -> Vec3 {
    let (w, x, y, z) = q;
    Vec3::new(
        (1.0 - 2.0 * (y * y + z * z)) * v.x
            + 2.0 * (x * y - w * z) * v.y
            + 2.0 * (x * z + w * y) * v.z,
        2.0 * (x * y + w * z) * v.x
            + (1.0 - 2.0 * (x * x + z * z)) * v.y
            + 2.0 * (y * z - w * x) * v.z,
        2.0 * (x * z - w * y) * v.x
            + 2.0 * (y * z + w * x) * v.y
            + (1.0 - 2.0 * (x * x + y * y)) * v.z,
    )
}

/// Simulates walking `path` with a sensor: one sample every `interval_us`
/// at each reference point (random heading), and a marker per point. With
/// `tilted`, every sample is also taken at a random device attitude, so only
/// the projected features recover the map.
pub fn synthesize_sensor_log(
    path: &RefPath,
    start_us: u64,
    interval_us: u64,
    tilted: bool,
    seed: u64,
) -> (Vec<SensorSample>, Vec<Marker>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut log = Vec::with_capacity(path.len());
    let mut markers = Vec::with_capacity(path.len());
    for (k, p) in path.points.iter().enumerate() {
        let t = start_us + k as u64 * interval_us;
        let heading = rng.random_range(0.0..core::f64::consts::TAU);
        let mut mag = Vec3::new(
            p.feat.mh * libm::cos(heading),
            p.feat.mh * libm::sin(heading),
            p.feat.mv,
        );
        let mut acc = Vec3::new(0.0, 0.0, STANDARD_GRAVITY);
        if tilted {
            let (a, b, c, d): (f64, f64, f64, f64) = (
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            );
            let n = libm::sqrt(a * a + b * b + c * c + d * d).max(1e-9);
            let q = (a / n, b / n, c / n, d / n);
            mag = rotate(q, mag);
            acc = rotate(q, acc);
        }
        log.push(SensorSample {
            timestamp_us: t,
            mag,
            acc,
            gyro: Vec3::default(),
        });
        markers.push(Marker {
            timestamp_us: t,
            pos: p.pos,
        });
    }
    (log, markers)
}
