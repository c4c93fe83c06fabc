//! Magnetic fingerprint positioning without the standard library.
//!
//! The crate covers the offline phase (feature extraction from magnetometer
//! and accelerometer samples, fingerprint maps, path windowing) and the
//! estimation phase (point, path and DTW matching), plus positioning-error
//! statistics and a seeded synthetic field generator used as ground truth.
//!
//! Everything here is pure computation over immutable inputs. File formats,
//! timing and the command-line driver live in the `magfp` crate.

#![cfg_attr(not(test), no_std)]
#![deny(unsafe_code)]

extern crate alloc;

pub mod evaluation;
pub mod features;
pub mod matching;
pub mod model;
pub mod store;
pub mod synthetic;

pub use evaluation::{
    error_heatmap, evaluate_workload, path_error, point_error, CaseError, ErrorReport, EvalError,
    HeatCell, MatchParams, Matcher, Quartiles, WorkloadDescriptor,
};
pub use features::{
    extract_features_aligned, extract_features_projected, extract_path_features,
    select_marker_samples, ExtractionMode, FeatureError, Marker,
};
pub use matching::{
    dtw_distance, dtw_match, feature_distance, path_match, point_match, Algorithm, DtwParams,
    DtwScratch, MatchError, MatchResult, Selection,
};
pub use model::{
    validate_map, Direction, FeatureVec, Pos2, RefPath, RefPoint, SensorSample, Vec3, Violation,
    Window, WindowId,
};
pub use store::{build_map, enumerate_windows, FingerprintMap, StoreError, WindowSet};
pub use synthetic::{
    field_at, generate_survey, warp_replay, FieldModel, Floor, Source, SurveyParams,
    SyntheticError, WarpKind, WarpOp,
};
