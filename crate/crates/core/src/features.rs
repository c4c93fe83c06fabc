//! (Mv, Mh) feature extraction.
//!
//! Two forms are provided. The projected form resolves the vertical
//! direction from the accelerometer and works at any device attitude. The
//! aligned form assumes the device z-axis points up (screen facing upward on
//! a cart) and ignores acceleration.

use alloc::vec::Vec;
use core::fmt;

use crate::model::{FeatureVec, Pos2, SensorSample, Vec3};

/// Accelerations at or below this norm (m/s²) cannot resolve "down".
pub const GRAVITY_EPS: f64 = 1e-6;

/// How far (µs) a marker may sit outside the log's time span.
pub const MARKER_SLACK_US: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub enum FeatureError {
    /// `|a| <= GRAVITY_EPS`; carries the offending sample index when known.
    DegenerateGravity {
        sample: Option<usize>,
    },
    EmptyLog,
    MarkerOutOfRange {
        marker: usize,
        timestamp_us: u64,
    },
}

impl fmt::Display for FeatureError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeatureError::DegenerateGravity { sample: Some(i) } => {
                write!(f, "sample {i}: acceleration too small to resolve gravity")
            }
            FeatureError::DegenerateGravity { sample: None } => {
                write!(f, "acceleration too small to resolve gravity")
            }
            FeatureError::EmptyLog => write!(f, "sensor log is empty"),
            FeatureError::MarkerOutOfRange {
                marker,
                timestamp_us,
            } => write!(
                f,
                "marker {marker} at t={timestamp_us}us lies outside the sensor log"
            ),
        }
    }
}

impl core::error::Error for FeatureError {}

/// Which feature form to compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum ExtractionMode {
    #[default]
    Aligned,
    Projected,
}

/// A position tag: the device was at `pos` at `timestamp_us`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Marker {
    pub timestamp_us: u64,
    pub pos: Pos2,
}

fn horizontal_norm(h: Vec3) -> f64 {
    libm::sqrt(h.x * h.x + h.y * h.y + h.z * h.z)
}

/// Features at an arbitrary attitude: `mv` is the signed scalar projection of
/// the field onto the gravity direction, `mh` the norm of what remains.
///
/// `mh` is computed as the length of the rejection `m - mv·â` rather than
/// `sqrt(|m|² - mv²)`. The two agree analytically; the rejection avoids
/// cancellation and reduces bit-for-bit to the aligned form when `a` is
/// along +z.
pub fn extract_features_projected(s: &SensorSample) -> Result<FeatureVec, FeatureError> {
    let a_norm = s.acc.norm();
    if a_norm.is_nan() || a_norm <= GRAVITY_EPS {
        return Err(FeatureError::DegenerateGravity { sample: None });
    }
    let up = Vec3::new(s.acc.x / a_norm, s.acc.y / a_norm, s.acc.z / a_norm);
    let mv = s.mag.dot(up);
    let rejection = s.mag - up.scale(mv);
    Ok(FeatureVec::new(mv, horizontal_norm(rejection)))
}

/// Features for a device whose z-axis is vertical.
pub fn extract_features_aligned(s: &SensorSample) -> FeatureVec {
    let m = s.mag;
    FeatureVec::new(m.z, horizontal_norm(Vec3::new(m.x, m.y, 0.0)))
}

/// Computes features for one sample in the given mode.
pub fn extract(s: &SensorSample, mode: ExtractionMode) -> Result<FeatureVec, FeatureError> {
    match mode {
        ExtractionMode::Aligned => Ok(extract_features_aligned(s)),
        ExtractionMode::Projected => extract_features_projected(s),
    }
}

/// For every marker, the index of the log sample nearest in time (ties go to
/// the earlier sample). The log must be sorted by timestamp.
pub fn select_marker_samples(
    log: &[SensorSample],
    markers: &[Marker],
) -> Result<Vec<usize>, FeatureError> {
    let (first, last) = match (log.first(), log.last()) {
        (Some(f), Some(l)) => (f.timestamp_us, l.timestamp_us),
        _ => return Err(FeatureError::EmptyLog),
    };
    markers
        .iter()
        .enumerate()
        .map(|(mi, mk)| {
            let t = mk.timestamp_us;
            if t.saturating_add(MARKER_SLACK_US) < first || t > last.saturating_add(MARKER_SLACK_US)
            {
                return Err(FeatureError::MarkerOutOfRange {
                    marker: mi,
                    timestamp_us: t,
                });
            }
            // first sample with timestamp >= t
            let hi = log.partition_point(|s| s.timestamp_us < t);
            let idx = if hi == 0 {
                0
            } else if hi == log.len() {
                log.len() - 1
            } else {
                let before = t - log[hi - 1].timestamp_us;
                let after = log[hi].timestamp_us - t;
                if after < before {
                    hi
                } else {
                    // earliest sample among equal timestamps
                    log.partition_point(|s| s.timestamp_us < log[hi - 1].timestamp_us)
                }
            };
            Ok(idx)
        })
        .collect()
}

/// Pairs each marker position with the features of its nearest sample.
pub fn extract_path_features(
    log: &[SensorSample],
    markers: &[Marker],
    mode: ExtractionMode,
) -> Result<Vec<(Pos2, FeatureVec)>, FeatureError> {
    let picks = select_marker_samples(log, markers)?;
    picks
        .into_iter()
        .zip(markers)
        .map(|(i, mk)| {
            extract(&log[i], mode)
                .map(|f| (mk.pos, f))
                .map_err(|_| FeatureError::DegenerateGravity { sample: Some(i) })
        })
        .collect()
}
