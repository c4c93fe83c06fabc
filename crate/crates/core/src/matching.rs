//! Point, path and DTW fingerprint matching.
//!
//! All matchers are exhaustive argmins. Ties on score resolve to the
//! smallest key in canonical order (`point_id` for points, [`WindowId`] for
//! windows), so any evaluation order or partitioning of the candidates gives
//! the same answer; [`better`] is the reduction that guarantees this.

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use crate::model::{FeatureVec, Window, WindowId};
use crate::store::FingerprintMap;

/// The three matching algorithms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Algorithm {
    Point,
    Path,
    Dtw,
}

impl Algorithm {
    #[allow(missing_docs)]
    pub const ALL: [Algorithm; 3] = [Algorithm::Point, Algorithm::Path, Algorithm::Dtw];

    /// Lowercase name as used in file formats.
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Point => "point",
            Algorithm::Path => "path",
            Algorithm::Dtw => "dtw",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Optional Sakoe-Chiba band for DTW; `None` leaves the warping unconstrained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DtwParams {
    pub band: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MatchError {
    EmptyMap,
    EmptyCandidates,
    EmptySequence,
    LengthMismatch {
        expected: usize,
        found: usize,
        candidate: usize,
    },
}

impl fmt::Display for MatchError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MatchError::EmptyMap => write!(f, "map has no reference points"),
            MatchError::EmptyCandidates => write!(f, "no candidate windows"),
            MatchError::EmptySequence => write!(f, "empty feature sequence"),
            MatchError::LengthMismatch {
                expected,
                found,
                candidate,
            } => write!(
                f,
                "candidate {candidate} has length {found}, target has {expected}"
            ),
        }
    }
}

impl core::error::Error for MatchError {}

/// What a matcher selected.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "lowercase"))]
pub enum Selection {
    Point {
        point_id: u32,
        path_id: u32,
        seq: u32,
    },
    Window(WindowId),
}

/// Outcome of one match.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MatchResult {
    pub selection: Selection,
    /// Position of the winner in the candidate list (global point order for
    /// point matching).
    pub candidate: usize,
    pub score: f64,
    pub algorithm: Algorithm,
}

/// Euclidean distance in (mv, mh) space.
#[inline]
pub fn feature_distance(a: FeatureVec, b: FeatureVec) -> f64 {
    let dv = a.mv - b.mv;
    let dh = a.mh - b.mh;
    libm::sqrt(dv * dv + dh * dh)
}

/// Total order on scores: NaN ranks after every number.
fn cmp_score(a: f64, b: f64) -> Ordering {
    match (a.is_nan(), b.is_nan()) {
        (false, false) => a.partial_cmp(&b).unwrap_or(Ordering::Equal),
        (x, y) => x.cmp(&y),
    }
}

/// Picks the better of two `(score, key)` candidates: lower score, then
/// lower key. Associative and commutative, so it can reduce candidates in
/// any grouping.
#[inline]
pub fn better<K: Ord>(a: (f64, K), b: (f64, K)) -> (f64, K) {
    match cmp_score(a.0, b.0).then_with(|| a.1.cmp(&b.1)) {
        Ordering::Greater => b,
        _ => a,
    }
}

/// Nearest reference point to `target` in feature space.
pub fn point_match(target: FeatureVec, map: &FingerprintMap) -> Result<MatchResult, MatchError> {
    let (score, (_, idx)) = map
        .points()
        .enumerate()
        .map(|(i, p)| (feature_distance(target, p.feat), (p.point_id, i)))
        .reduce(better)
        .ok_or(MatchError::EmptyMap)?;
    let p = map.points().nth(idx).ok_or(MatchError::EmptyMap)?;
    Ok(MatchResult {
        selection: Selection::Point {
            point_id: p.point_id,
            path_id: p.path_id,
            seq: p.seq,
        },
        candidate: idx,
        score,
        algorithm: Algorithm::Point,
    })
}

/// Mean index-wise feature distance between equal-length sequences.
pub fn path_score(target: &[FeatureVec], candidate: &[FeatureVec]) -> f64 {
    let sum: f64 = target
        .iter()
        .zip(candidate)
        .map(|(&t, &c)| feature_distance(t, c))
        .sum();
    sum / target.len() as f64
}

fn check_lengths(target: &[FeatureVec], windows: &[Window]) -> Result<(), MatchError> {
    if target.is_empty() {
        return Err(MatchError::EmptySequence);
    }
    if windows.is_empty() {
        return Err(MatchError::EmptyCandidates);
    }
    match windows.iter().position(|w| w.len() != target.len()) {
        Some(i) => Err(MatchError::LengthMismatch {
            expected: target.len(),
            found: windows[i].len(),
            candidate: i,
        }),
        None => Ok(()),
    }
}

fn window_result(
    windows: &[Window],
    best: (f64, (WindowId, usize)),
    algorithm: Algorithm,
) -> MatchResult {
    let (score, (_, idx)) = best;
    MatchResult {
        selection: Selection::Window(windows[idx].id),
        candidate: idx,
        score,
        algorithm,
    }
}

/// Window whose features are closest to `target` on average, index by index.
/// Every candidate must have the target's length.
pub fn path_match(target: &[FeatureVec], windows: &[Window]) -> Result<MatchResult, MatchError> {
    check_lengths(target, windows)?;
    let best = windows
        .iter()
        .enumerate()
        .map(|(i, w)| (path_score(target, &w.feats), (w.id, i)))
        .reduce(better)
        .ok_or(MatchError::EmptyCandidates)?;
    Ok(window_result(windows, best, Algorithm::Path))
}

/// Reusable DTW row storage so repeated scoring does not allocate.
#[derive(Debug, Default, Clone)]
pub struct DtwScratch {
    prev: Vec<f64>,
    cur: Vec<f64>,
}

impl DtwScratch {
    #[allow(missing_docs)]
    pub fn new() -> Self {
        Self::default()
    }

    /// Accumulated DTW cost; see [`dtw_distance`]. Both inputs non-empty.
    pub fn distance(&mut self, a: &[FeatureVec], b: &[FeatureVec], params: DtwParams) -> f64 {
        let m = b.len();
        let band = params.band.unwrap_or(usize::MAX);
        self.prev.clear();
        self.prev.resize(m + 1, f64::INFINITY);
        self.cur.clear();
        self.cur.resize(m + 1, f64::INFINITY);
        self.prev[0] = 0.0;

        for (i, &ai) in a.iter().enumerate() {
            let i = i + 1;
            let lo = i.saturating_sub(band).max(1);
            let hi = i.saturating_add(band).min(m);
            self.cur.fill(f64::INFINITY);
            for j in lo..=hi {
                let step = self.prev[j].min(self.cur[j - 1]).min(self.prev[j - 1]);
                self.cur[j] = feature_distance(ai, b[j - 1]) + step;
            }
            core::mem::swap(&mut self.prev, &mut self.cur);
        }
        self.prev[m]
    }
}

/// Classic DTW: `D(i,j) = d(a_i, b_j) + min(D(i-1,j), D(i,j-1), D(i-1,j-1))`
/// with `D(0,0) = 0` and infinite borders. Returns the raw accumulated cost
/// `D(|a|,|b|)`. Under a band, cells with `|i-j| > band` are unreachable, and
/// the result is `+inf` when the band cannot connect the corners.
pub fn dtw_distance(
    a: &[FeatureVec],
    b: &[FeatureVec],
    params: DtwParams,
) -> Result<f64, MatchError> {
    if a.is_empty() || b.is_empty() {
        return Err(MatchError::EmptySequence);
    }
    Ok(DtwScratch::new().distance(a, b, params))
}

/// Window with the lowest DTW cost against `target`. Lengths may differ.
pub fn dtw_match(
    target: &[FeatureVec],
    windows: &[Window],
    params: DtwParams,
) -> Result<MatchResult, MatchError> {
    if target.is_empty() {
        return Err(MatchError::EmptySequence);
    }
    if windows.iter().any(Window::is_empty) {
        return Err(MatchError::EmptySequence);
    }
    let mut scratch = DtwScratch::new();
    let best = windows
        .iter()
        .enumerate()
        .map(|(i, w)| (scratch.distance(target, &w.feats, params), (w.id, i)))
        .reduce(better)
        .ok_or(MatchError::EmptyCandidates)?;
    Ok(window_result(windows, best, Algorithm::Dtw))
}

/// Convenience: every candidate's score under `algorithm` (`Point` is not a
/// window algorithm and yields path scores).
pub fn window_scores(
    target: &[FeatureVec],
    windows: &[Window],
    algorithm: Algorithm,
    params: DtwParams,
) -> Vec<f64> {
    let mut scratch = DtwScratch::new();
    let mut out = vec![0.0; windows.len()];
    for (o, w) in out.iter_mut().zip(windows) {
        *o = match algorithm {
            Algorithm::Dtw => scratch.distance(target, &w.feats, params),
            _ => path_score(target, &w.feats),
        };
    }
    out
}
