//! Wall-clock timing of full matching workloads.

use std::hint::black_box;
use std::time::Instant;

use magfp_core::{
    Algorithm, EvalError, FeatureVec, FingerprintMap, MatchParams, Matcher, WorkloadDescriptor,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::parallel::par_match_targets;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("repetitions must be at least 1")]
    NoRepetitions,
    #[error("no targets to time")]
    NoTargets,
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmTiming {
    pub algorithm: Algorithm,
    /// Median wall time of one full pass over all targets.
    pub seconds: f64,
    pub runs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingReport {
    pub workload: WorkloadDescriptor,
    pub repetitions: usize,
    pub parallel: bool,
    pub timings: Vec<AlgorithmTiming>,
}

impl TimingReport {
    pub fn seconds(&self, algorithm: Algorithm) -> Option<f64> {
        self.timings
            .iter()
            .find(|t| t.algorithm == algorithm)
            .map(|t| t.seconds)
    }
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        (s[n / 2 - 1] + s[n / 2]) / 2.0
    }
}

/// Times `repetitions` passes of each algorithm over all `targets` and
/// reports the median. Window enumeration happens before the clock starts.
/// Matching errors on individual targets are timed like successes.
pub fn benchmark<T: AsRef<[FeatureVec]> + Sync>(
    map: &FingerprintMap,
    targets: &[T],
    algorithms: &[Algorithm],
    params: MatchParams,
    repetitions: usize,
    parallel: bool,
) -> Result<TimingReport, BenchError> {
    if repetitions == 0 {
        return Err(BenchError::NoRepetitions);
    }
    if targets.is_empty() {
        return Err(BenchError::NoTargets);
    }
    let mut workload = Matcher::new(map, Algorithm::Path, params)?.descriptor(targets.len());
    let mut timings = Vec::with_capacity(algorithms.len());
    for &algorithm in algorithms {
        let matcher = Matcher::new(map, algorithm, params)?;
        if algorithm != Algorithm::Point {
            workload = matcher.descriptor(targets.len());
        }
        let runs: Vec<f64> = (0..repetitions)
            .map(|_| {
                let t0 = Instant::now();
                if parallel {
                    black_box(par_match_targets(&matcher, targets));
                } else {
                    for t in targets {
                        let _ = black_box(matcher.match_features(black_box(t.as_ref())));
                    }
                }
                // a zero reading would break the positive-time contract
                t0.elapsed().as_secs_f64().max(1e-9)
            })
            .collect();
        timings.push(AlgorithmTiming {
            algorithm,
            seconds: median(&runs),
            runs,
        });
    }
    Ok(TimingReport {
        workload,
        repetitions,
        parallel,
        timings,
    })
}
