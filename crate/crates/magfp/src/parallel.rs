//! Multi-threaded matching on rayon.
//!
//! Candidates and targets may be split across threads in any way; the
//! reduction is [`magfp_core::matching::better`], so every function here
//! returns exactly what its sequential counterpart in `magfp_core` returns.

use magfp_core::matching::{better, path_score, DtwScratch};
use magfp_core::{
    Algorithm, DtwParams, ErrorReport, EvalError, FeatureVec, FingerprintMap, MatchError,
    MatchParams, MatchResult, Matcher, Selection, Window,
};
use rayon::prelude::*;

/// [`magfp_core::path_match`] / [`magfp_core::dtw_match`] with candidate
/// scoring spread over threads.
pub fn par_match_windows(
    target: &[FeatureVec],
    windows: &[Window],
    algorithm: Algorithm,
    dtw: DtwParams,
) -> Result<MatchResult, MatchError> {
    if target.is_empty() || windows.iter().any(Window::is_empty) {
        return Err(MatchError::EmptySequence);
    }
    if algorithm == Algorithm::Path {
        if let Some(i) = windows.iter().position(|w| w.len() != target.len()) {
            return Err(MatchError::LengthMismatch {
                expected: target.len(),
                found: windows[i].len(),
                candidate: i,
            });
        }
    }
    let (score, (_, idx)) = windows
        .par_iter()
        .enumerate()
        .map_init(DtwScratch::new, |scratch, (i, w)| {
            let s = match algorithm {
                Algorithm::Dtw => scratch.distance(target, &w.feats, dtw),
                _ => path_score(target, &w.feats),
            };
            (s, (w.id, i))
        })
        .reduce_with(better)
        .ok_or(MatchError::EmptyCandidates)?;
    Ok(MatchResult {
        selection: Selection::Window(windows[idx].id),
        candidate: idx,
        score,
        algorithm,
    })
}

/// Matches every target on the thread pool; output order follows input.
pub fn par_match_targets<T: AsRef<[FeatureVec]> + Sync>(
    matcher: &Matcher<'_>,
    targets: &[T],
) -> Vec<Result<MatchResult, MatchError>> {
    targets
        .par_iter()
        .map(|t| matcher.match_features(t.as_ref()))
        .collect()
}

/// [`magfp_core::evaluate_workload`] with targets fanned out over threads.
pub fn par_evaluate_workload(
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
        .par_iter()
        .enumerate()
        .map(|(i, t)| matcher.evaluate_case(i, t))
        .collect::<Result<Vec<_>, _>>()?;
    ErrorReport::from_cases(cases)
}
