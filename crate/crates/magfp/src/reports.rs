//! JSON documents exchanged between `match`, `evaluate` and `bench`.

use magfp_core::{
    error_heatmap, path_error, point_error, Algorithm, CaseError, ErrorReport, EvalError, HeatCell,
    MatchParams, MatchResult, Pos2, Quartiles, Selection, WorkloadDescriptor,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formats::Target;

/// One matched target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchRecord {
    pub case_id: u64,
    pub result: MatchResult,
    /// Coordinates of the selection: one point for point matching, the whole
    /// window otherwise.
    pub estimate: Vec<Pos2>,
}

/// Output of `magfp match`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultsFile {
    pub algorithm: Algorithm,
    pub params: MatchParams,
    pub workload: WorkloadDescriptor,
    pub results: Vec<MatchRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseRecord {
    pub case_id: u64,
    /// True position of the target's first sample.
    pub anchor: Pos2,
    pub error_m: f64,
    pub score: f64,
    pub selection: Selection,
}

/// Output of `magfp evaluate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub algorithm: Algorithm,
    pub params: MatchParams,
    pub workload: WorkloadDescriptor,
    pub per_case: Vec<CaseRecord>,
    pub quartiles: Quartiles,
    pub mean: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum EvaluateError {
    #[error("results file holds no cases")]
    Empty,
    #[error("case ids differ between results and truth, first mismatch: {0}")]
    IdMismatch(u64),
    #[error("truth for case {0} has no coordinates")]
    MissingCoords(u64),
    #[error("case {case_id}: {source}")]
    Case { case_id: u64, source: EvalError },
}

/// First id at which the sorted id lists disagree.
fn first_mismatch(mut a: Vec<u64>, mut b: Vec<u64>) -> Option<u64> {
    a.sort_unstable();
    b.sort_unstable();
    let n = a.len().max(b.len());
    (0..n).find_map(|i| match (a.get(i), b.get(i)) {
        (Some(x), Some(y)) if x == y => None,
        (Some(x), Some(y)) => Some(*x.min(y)),
        (Some(x), None) | (None, Some(x)) => Some(*x),
        (None, None) => None,
    })
}

/// Scores match results against true coordinates. Point results are scored
/// on the target's first position, window results index by index over the
/// whole trajectory.
pub fn evaluate_results(
    results: &ResultsFile,
    truth: &[Target],
) -> Result<(ReportFile, ErrorReport), EvaluateError> {
    if results.results.is_empty() {
        return Err(EvaluateError::Empty);
    }
    let ids = |it: &mut dyn Iterator<Item = u64>| it.collect::<Vec<_>>();
    if let Some(id) = first_mismatch(
        ids(&mut results.results.iter().map(|r| r.case_id)),
        ids(&mut truth.iter().map(|t| t.case_id)),
    ) {
        return Err(EvaluateError::IdMismatch(id));
    }

    let mut cases = Vec::with_capacity(results.results.len());
    for rec in &results.results {
        let t = truth
            .iter()
            .find(|t| t.case_id == rec.case_id)
            .ok_or(EvaluateError::IdMismatch(rec.case_id))?;
        let coords = t
            .coords
            .as_ref()
            .filter(|c| !c.is_empty())
            .ok_or(EvaluateError::MissingCoords(rec.case_id))?;
        let case_err = |source| EvaluateError::Case {
            case_id: rec.case_id,
            source,
        };
        let error_m = match rec.result.selection {
            Selection::Point { .. } => {
                let est = rec.estimate.first().ok_or(case_err(EvalError::EmptyPath))?;
                point_error(coords[0], *est)
            }
            Selection::Window(_) => path_error(coords, &rec.estimate).map_err(case_err)?,
        };
        cases.push(CaseError {
            case_id: rec.case_id as usize,
            anchor: coords[0],
            error_m,
            result: rec.result,
        });
    }
    let report = ErrorReport::from_cases(cases)
        .map_err(|source| EvaluateError::Case { case_id: 0, source })?;
    let file = ReportFile {
        algorithm: results.algorithm,
        params: results.params,
        workload: results.workload,
        per_case: report
            .per_case
            .iter()
            .map(|c| CaseRecord {
                case_id: c.case_id as u64,
                anchor: c.anchor,
                error_m: c.error_m,
                score: c.result.score,
                selection: c.result.selection,
            })
            .collect(),
        quartiles: report.quartiles,
        mean: report.mean,
    };
    Ok((file, report))
}

/// Heatmap of a report's per-case errors.
pub fn heatmap(report: &ErrorReport, cell_m: f64) -> Result<Vec<HeatCell>, EvalError> {
    error_heatmap(&report.per_case, cell_m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use magfp_core::{Direction, FeatureVec, WindowId};

    fn record(case_id: u64, est: Vec<Pos2>) -> MatchRecord {
        MatchRecord {
            case_id,
            result: MatchResult {
                selection: Selection::Window(WindowId {
                    path_id: 0,
                    start: 0,
                    direction: Direction::Forward,
                }),
                candidate: 0,
                score: 0.0,
                algorithm: Algorithm::Path,
            },
            estimate: est,
        }
    }

    fn results(recs: Vec<MatchRecord>) -> ResultsFile {
        ResultsFile {
            algorithm: Algorithm::Path,
            params: MatchParams::default(),
            workload: WorkloadDescriptor {
                n_points: 0,
                n_windows: 0,
                window_len: 2,
                n_targets: recs.len(),
            },
            results: recs,
        }
    }

    fn truth(case_id: u64, coords: Vec<Pos2>) -> Target {
        Target {
            case_id,
            feats: vec![FeatureVec::default(); coords.len()],
            coords: Some(coords),
        }
    }

    #[test]
    fn shifted_results_average_five() {
        let tc = vec![Pos2::new(0.0, 0.0), Pos2::new(1.0, 0.0)];
        let est: Vec<Pos2> = tc.iter().map(|p| Pos2::new(p.x + 3.0, p.y + 4.0)).collect();
        let (file, _) = evaluate_results(
            &results(vec![record(1, est.clone()), record(2, est)]),
            &[truth(2, tc.clone()), truth(1, tc)],
        )
        .unwrap();
        assert!((file.mean - 5.0).abs() < 1e-12);
        assert_eq!(file.per_case.len(), 2);
    }

    #[test]
    fn id_mismatch_and_empty() {
        let tc = vec![Pos2::new(0.0, 0.0), Pos2::new(1.0, 0.0)];
        let r = results(vec![record(1, tc.clone()), record(3, tc.clone())]);
        assert_eq!(
            evaluate_results(&r, &[truth(1, tc.clone()), truth(2, tc.clone())]).unwrap_err(),
            EvaluateError::IdMismatch(2)
        );
        assert_eq!(
            evaluate_results(&results(vec![]), &[]).unwrap_err(),
            EvaluateError::Empty
        );
        let mut no_coords = truth(1, tc.clone());
        no_coords.coords = None;
        assert_eq!(
            evaluate_results(&results(vec![record(1, tc)]), &[no_coords]).unwrap_err(),
            EvaluateError::MissingCoords(1)
        );
    }
}
