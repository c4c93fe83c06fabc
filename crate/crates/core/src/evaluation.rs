//! Positioning error, quartile summaries and error heatmaps.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;

use crate::matching::{
    dtw_match, path_match, point_match, Algorithm, DtwParams, MatchError, MatchResult, Selection,
};
use crate::model::{Pos2, Window};
use crate::store::{enumerate_windows, FingerprintMap, StoreError, WindowSet};

#[derive(Debug, Clone, PartialEq)]
pub enum EvalError {
    NoTargets,
    EmptyPath,
    LengthMismatch { target: usize, estimate: usize },
    InvalidCell(f64),
    Match(MatchError),
    Store(StoreError),
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalError::NoTargets => write!(f, "no targets to evaluate"),
            EvalError::EmptyPath => write!(f, "cannot score an empty path"),
            EvalError::LengthMismatch { target, estimate } => write!(
                f,
                "target path has {target} points but estimate has {estimate}"
            ),
            EvalError::InvalidCell(c) => write!(f, "heatmap cell size {c} must be positive"),
            EvalError::Match(e) => write!(f, "{e}"),
            EvalError::Store(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for EvalError {}

impl From<MatchError> for EvalError {
    fn from(e: MatchError) -> Self {
        EvalError::Match(e)
    }
}

impl From<StoreError> for EvalError {
    fn from(e: StoreError) -> Self {
        EvalError::Store(e)
    }
}

/// Distance between true and estimated positions, meters.
pub fn point_error(tar: Pos2, est: Pos2) -> f64 {
    tar.distance(est)
}

/// Mean index-wise distance between a true and an estimated trajectory.
/// Index `i` is paired with index `i`, whatever direction either was walked.
pub fn path_error(tar: &[Pos2], est: &[Pos2]) -> Result<f64, EvalError> {
    if tar.len() != est.len() {
        return Err(EvalError::LengthMismatch {
            target: tar.len(),
            estimate: est.len(),
        });
    }
    if tar.is_empty() {
        return Err(EvalError::EmptyPath);
    }
    let sum: f64 = tar.iter().zip(est).map(|(&t, &e)| point_error(t, e)).sum();
    Ok(sum / tar.len() as f64)
}

/// Knobs shared by every matcher in a workload.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MatchParams {
    /// Window length M for path and DTW matching.
    pub window: usize,
    /// Also match against every window walked backwards.
    pub include_reversed: bool,
    pub dtw: DtwParams,
}

impl Default for MatchParams {
    fn default() -> Self {
        Self {
            window: 20,
            include_reversed: true,
            dtw: DtwParams::default(),
        }
    }
}

/// Sizes of a matching workload.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WorkloadDescriptor {
    pub n_points: usize,
    pub n_windows: usize,
    pub window_len: usize,
    pub n_targets: usize,
}

/// A map prepared for one algorithm: windows are enumerated once and shared
/// by every target. Immutable, so it can be used from several threads.
#[derive(Debug, Clone)]
pub struct Matcher<'a> {
    map: &'a FingerprintMap,
    algorithm: Algorithm,
    params: MatchParams,
    windows: WindowSet,
    positions: Vec<Pos2>,
}

impl<'a> Matcher<'a> {
    /// Prepares `map` for `algorithm`. Point matching enumerates no windows.
    pub fn new(
        map: &'a FingerprintMap,
        algorithm: Algorithm,
        params: MatchParams,
    ) -> Result<Self, EvalError> {
        let windows = match algorithm {
            Algorithm::Point => WindowSet {
                windows: Vec::new(),
                window_len: params.window,
                skipped_paths: 0,
            },
            _ => enumerate_windows(map, params.window, params.include_reversed)?,
        };
        Ok(Self {
            map,
            algorithm,
            params,
            windows,
            positions: map.points().map(|p| p.pos).collect(),
        })
    }

    #[allow(missing_docs)]
    pub fn algorithm(&self) -> Algorithm {
        self.algorithm
    }

    #[allow(missing_docs)]
    pub fn params(&self) -> MatchParams {
        self.params
    }

    /// Candidate windows (empty for point matching).
    pub fn windows(&self) -> &[Window] {
        &self.windows.windows
    }

    #[allow(missing_docs)]
    pub fn map(&self) -> &FingerprintMap {
        self.map
    }

    /// Workload sizes for `n_targets` targets.
    pub fn descriptor(&self, n_targets: usize) -> WorkloadDescriptor {
        WorkloadDescriptor {
            n_points: self.positions.len(),
            n_windows: self.windows.windows.len(),
            window_len: self.params.window,
            n_targets,
        }
    }

    /// Matches one target trajectory. Point matching uses only its first
    /// sample.
    pub fn match_features(
        &self,
        feats: &[crate::model::FeatureVec],
    ) -> Result<MatchResult, MatchError> {
        match self.algorithm {
            Algorithm::Point => {
                let first = feats.first().ok_or(MatchError::EmptySequence)?;
                point_match(*first, self.map)
            }
            Algorithm::Path => path_match(feats, &self.windows.windows),
            Algorithm::Dtw => dtw_match(feats, &self.windows.windows, self.params.dtw),
        }
    }

    /// Coordinates of what `result` selected: one point, or a whole window.
    pub fn estimate_coords(&self, result: &MatchResult) -> Vec<Pos2> {
        match result.selection {
            Selection::Point { .. } => self
                .positions
                .get(result.candidate)
                .map(|&p| alloc::vec![p])
                .unwrap_or_default(),
            Selection::Window(_) => self
                .windows
                .windows
                .get(result.candidate)
                .map(|w| w.coords.clone())
                .unwrap_or_default(),
        }
    }

    /// Matches `target` and scores the estimate against its true coordinates.
    pub fn evaluate_case(&self, case_id: usize, target: &Window) -> Result<CaseError, EvalError> {
        let result = self.match_features(&target.feats)?;
        let est = self.estimate_coords(&result);
        let anchor = *target.coords.first().ok_or(EvalError::EmptyPath)?;
        let error_m = match self.algorithm {
            Algorithm::Point => point_error(anchor, est[0]),
            _ => path_error(&target.coords, &est)?,
        };
        Ok(CaseError {
            case_id,
            anchor,
            error_m,
            result,
        })
    }
}

/// One evaluated target.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CaseError {
    pub case_id: usize,
    /// True position of the target's first sample; heatmaps bin on it.
    pub anchor: Pos2,
    pub error_m: f64,
    pub result: MatchResult,
}

/// Five-number summary, meters.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Quartiles {
    pub min: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub max: f64,
}

/// Quantile of sorted data by linear interpolation between closest ranks
/// (position `(n-1)·q`).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = libm::floor(h) as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

impl Quartiles {
    /// Summary of `values`; `None` when empty.
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(|a, b| a.total_cmp(b));
        Some(Self {
            min: v[0],
            q25: quantile_sorted(&v, 0.25),
            median: quantile_sorted(&v, 0.5),
            q75: quantile_sorted(&v, 0.75),
            max: v[v.len() - 1],
        })
    }
}

/// Per-case errors plus their summary.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ErrorReport {
    pub per_case: Vec<CaseError>,
    pub quartiles: Quartiles,
    pub mean: f64,
}

impl ErrorReport {
    /// Summarizes `cases`, sorting them by case id first so the report does
    /// not depend on the order they were produced in.
    pub fn from_cases(mut cases: Vec<CaseError>) -> Result<Self, EvalError> {
        cases.sort_by_key(|c| c.case_id);
        let errors: Vec<f64> = cases.iter().map(|c| c.error_m).collect();
        let quartiles = Quartiles::of(&errors).ok_or(EvalError::NoTargets)?;
        let mean = errors.iter().sum::<f64>() / errors.len() as f64;
        // summation rounding can leave the mean a hair outside [min, max]
        let mean = mean.clamp(quartiles.min, quartiles.max);
        Ok(Self {
            per_case: cases,
            quartiles,
            mean,
        })
    }
}

/// Runs `algorithm` on every target and reports positioning errors. Case ids
/// are target indices.
pub fn evaluate_workload(
    map: &FingerprintMap,
    targets: &[Window],
    algorithm: Algorithm,
    params: MatchParams,
) -> Result<ErrorReport, EvalError> {
    if targets.is_empty() {
        return Err(EvalError::NoTargets);
    }
    let matcher = Matcher::new(map, algorithm, params)?;
    let cases = targets
        .iter()
        .enumerate()
        .map(|(i, t)| matcher.evaluate_case(i, t))
        .collect::<Result<Vec<_>, _>>()?;
    ErrorReport::from_cases(cases)
}

/// One heatmap cell: center coordinates and the mean error binned there.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HeatCell {
    pub x_m: f64,
    pub y_m: f64,
    pub error_m: f64,
    pub count: usize,
}

/// Bins case errors into square cells of side `cell_m` (aligned to the
/// origin) by each case's anchor. Only non-empty cells are returned, sorted
/// by `(x_m, y_m)`.
pub fn error_heatmap(cases: &[CaseError], cell_m: f64) -> Result<Vec<HeatCell>, EvalError> {
    if !(cell_m > 0.0 && cell_m.is_finite()) {
        return Err(EvalError::InvalidCell(cell_m));
    }
    let mut bins: BTreeMap<(i64, i64), (f64, usize)> = BTreeMap::new();
    for c in cases {
        let key = (
            libm::floor(c.anchor.x / cell_m) as i64,
            libm::floor(c.anchor.y / cell_m) as i64,
        );
        let e = bins.entry(key).or_insert((0.0, 0));
        e.0 += c.error_m;
        e.1 += 1;
    }
    Ok(bins
        .into_iter()
        .map(|((ix, iy), (sum, n))| HeatCell {
            x_m: (ix as f64 + 0.5) * cell_m,
            y_m: (iy as f64 + 0.5) * cell_m,
            error_m: sum / n as f64,
            count: n,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matching::Selection;
    use crate::model::{FeatureVec, WindowId};
    use crate::store::build_map;
    use alloc::vec;
    use proptest::prelude::*;

    fn p(x: f64, y: f64) -> Pos2 {
        Pos2::new(x, y)
    }

    #[test]
    fn point_error_examples() {
        assert_eq!(point_error(p(0.0, 0.0), p(0.0, 0.0)), 0.0);
        assert_eq!(point_error(p(1.0, 1.0), p(4.0, 5.0)), 5.0);
        assert_eq!(point_error(p(2.0, 0.0), p(0.0, 0.0)), 2.0);
    }

    #[test]
    fn path_error_examples() {
        let tar: Vec<Pos2> = (0..20).map(|i| p(i as f64 * 0.3, 1.0)).collect();
        assert_eq!(path_error(&tar, &tar).unwrap(), 0.0);
        let shifted: Vec<Pos2> = tar.iter().map(|q| p(q.x + 3.0, q.y + 4.0)).collect();
        assert!((path_error(&tar, &shifted).unwrap() - 5.0).abs() < 1e-12);
        let half: Vec<Pos2> = tar
            .iter()
            .enumerate()
            .map(|(i, q)| if i % 2 == 0 { p(q.x, q.y + 2.0) } else { *q })
            .collect();
        assert!((path_error(&tar, &half).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(
            path_error(&tar, &tar[..19]),
            Err(EvalError::LengthMismatch {
                target: 20,
                estimate: 19
            })
        );
        assert_eq!(path_error(&[], &[]), Err(EvalError::EmptyPath));
    }

    #[test]
    fn quantiles_interpolate_linearly() {
        let q = Quartiles::of(&[4.0, 1.0, 3.0, 2.0]).unwrap();
        assert_eq!((q.min, q.max), (1.0, 4.0));
        assert!((q.q25 - 1.75).abs() < 1e-12);
        assert!((q.median - 2.5).abs() < 1e-12);
        assert!((q.q75 - 3.25).abs() < 1e-12);
        let single = Quartiles::of(&[7.5]).unwrap();
        assert_eq!(
            single,
            Quartiles {
                min: 7.5,
                q25: 7.5,
                median: 7.5,
                q75: 7.5,
                max: 7.5
            }
        );
        assert!(Quartiles::of(&[]).is_none());
    }

    fn case(id: usize, at: Pos2, err: f64) -> CaseError {
        CaseError {
            case_id: id,
            anchor: at,
            error_m: err,
            result: MatchResult {
                selection: Selection::Window(WindowId {
                    path_id: 0,
                    start: 0,
                    direction: crate::model::Direction::Forward,
                }),
                candidate: 0,
                score: 0.0,
                algorithm: Algorithm::Path,
            },
        }
    }

    #[test]
    fn heatmap_examples() {
        let zeros = [case(0, p(0.5, 0.5), 0.0), case(1, p(12.0, 3.0), 0.0)];
        assert!(error_heatmap(&zeros, 2.0)
            .unwrap()
            .iter()
            .all(|c| c.error_m == 0.0));

        let one = error_heatmap(&[case(0, p(1.0, 1.0), 5.0)], 10.0).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!((one[0].x_m, one[0].y_m, one[0].error_m), (5.0, 5.0, 5.0));

        let two = error_heatmap(
            &[case(0, p(1.0, 1.0), 2.0), case(1, p(2.0, 3.0), 4.0)],
            10.0,
        )
        .unwrap();
        assert_eq!(two.len(), 1);
        assert_eq!(two[0].error_m, 3.0);
        assert_eq!(two[0].count, 2);

        assert_eq!(error_heatmap(&[], 0.0), Err(EvalError::InvalidCell(0.0)));
    }

    fn two_path_map() -> FingerprintMap {
        let mk = |y: f64, k: f64| {
            (0..25)
                .map(|i| {
                    let x = i as f64 * 0.3;
                    (
                        p(x, y),
                        FeatureVec::new(40.0 + k * (x * 1.7).sin(), 20.0 + k * x),
                    )
                })
                .collect::<Vec<_>>()
        };
        build_map(vec![(0, mk(0.0, 3.0)), (1, mk(5.0, -2.0))], 0.3).unwrap()
    }

    #[test]
    fn exact_replay_gives_zero_error() {
        let map = two_path_map();
        let targets = enumerate_windows(&map, 20, true).unwrap().windows;
        for alg in [Algorithm::Path, Algorithm::Dtw] {
            let r = evaluate_workload(&map, &targets, alg, MatchParams::default()).unwrap();
            assert_eq!(r.mean, 0.0, "{alg}");
            assert_eq!(r.quartiles.max, 0.0);
            assert_eq!(r.per_case.len(), targets.len());
        }
    }

    #[test]
    fn point_aliasing_yields_separation() {
        let mut map = two_path_map();
        // make the last point of path 1 a feature twin of the first of path 0
        let twin = map.paths[0].points[0].feat;
        map.paths[1].points[24].feat = twin;
        let sep = map.paths[0].points[0]
            .pos
            .distance(map.paths[1].points[24].pos);
        let target = map
            .window(
                WindowId {
                    path_id: 1,
                    start: 5,
                    direction: crate::model::Direction::Reversed,
                },
                20,
            )
            .unwrap();
        assert_eq!(target.feats[0], twin);
        let r =
            evaluate_workload(&map, &[target], Algorithm::Point, MatchParams::default()).unwrap();
        assert!((r.quartiles.max - sep).abs() < 1e-12);
        assert!(r.mean > 0.0);
    }

    #[test]
    fn single_target_quartiles_collapse() {
        let map = two_path_map();
        let t = enumerate_windows(&map, 20, false).unwrap().windows[3].clone();
        let mut noisy = t.clone();
        noisy.feats[0].mv += 0.4;
        for alg in Algorithm::ALL {
            let r = evaluate_workload(&map, &[noisy.clone()], alg, MatchParams::default()).unwrap();
            let q = r.quartiles;
            assert!(q.min == q.q25 && q.q25 == q.median && q.median == q.q75 && q.q75 == q.max);
            assert_eq!(q.min, r.per_case[0].error_m);
        }
        assert_eq!(
            evaluate_workload(&map, &[], Algorithm::Path, MatchParams::default()),
            Err(EvalError::NoTargets)
        );
    }

    proptest! {
        #[test]
        fn path_error_translation_invariant(
            pts in proptest::collection::vec((-50.0..50.0f64, -50.0..50.0f64), 1..30),
            off in proptest::collection::vec((-5.0..5.0f64, -5.0..5.0f64), 30),
            shift in (-100.0..100.0f64, -100.0..100.0f64),
        ) {
            let tar: Vec<Pos2> = pts.iter().map(|&(x, y)| p(x, y)).collect();
            let est: Vec<Pos2> = tar.iter().zip(&off).map(|(q, o)| p(q.x + o.0, q.y + o.1)).collect();
            let mv = |v: &[Pos2]| v.iter().map(|q| p(q.x + shift.0, q.y + shift.1)).collect::<Vec<_>>();
            let e0 = path_error(&tar, &est).unwrap();
            let e1 = path_error(&mv(&tar), &mv(&est)).unwrap();
            prop_assert!((e0 - e1).abs() <= 1e-12 * (1.0 + e0) * 100.0);
        }

        #[test]
        fn quartiles_are_monotone(v in proptest::collection::vec(0.0..100.0f64, 1..50)) {
            let cases: Vec<CaseError> = v.iter().enumerate().map(|(i, &e)| case(i, p(0.0, 0.0), e)).collect();
            let r = ErrorReport::from_cases(cases).unwrap();
            let q = r.quartiles;
            prop_assert!(q.min <= q.q25 && q.q25 <= q.median && q.median <= q.q75 && q.q75 <= q.max);
            prop_assert!(q.min <= r.mean && r.mean <= q.max);
        }

        #[test]
        fn heatmap_matches_brute_force(
            pts in proptest::collection::vec((0.0..30.0f64, 0.0..30.0f64, 0.0..10.0f64), 1..40),
            cell in 0.5..8.0f64,
        ) {
            let cases: Vec<CaseError> = pts.iter().enumerate()
                .map(|(i, &(x, y, e))| case(i, p(x, y), e)).collect();
            let cells = error_heatmap(&cases, cell).unwrap();
            prop_assert_eq!(cells.iter().map(|c| c.count).sum::<usize>(), cases.len());
            for c in &cells {
                // recompute: every case whose anchor lies in this cell's square
                let members: Vec<f64> = cases.iter().filter(|k| {
                    (k.anchor.x / cell).floor() == ((c.x_m / cell) - 0.5).round()
                        && (k.anchor.y / cell).floor() == ((c.y_m / cell) - 0.5).round()
                }).map(|k| k.error_m).collect();
                prop_assert_eq!(members.len(), c.count);
                let mean = members.iter().sum::<f64>() / members.len() as f64;
                prop_assert!((mean - c.error_m).abs() < 1e-9);
            }
        }
    }
}
