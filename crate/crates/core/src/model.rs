//! Shared domain types.
//!
//! Units: magnetic quantities in µT, accelerations in m/s², positions in
//! meters, timestamps in microseconds. `seq` and window `start` indices are
//! 0-based.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;
use core::fmt;

use crate::store::FingerprintMap;

/// A plain 3-vector in a sensor's device frame.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    /// Dot product.
    pub fn dot(self, other: Self) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    /// Euclidean norm.
    pub fn norm(self) -> f64 {
        libm::sqrt(self.dot(self))
    }

    /// Multiplies every component by `k`.
    pub fn scale(self, k: f64) -> Self {
        Self::new(self.x * k, self.y * k, self.z * k)
    }
}

impl core::ops::Sub for Vec3 {
    type Output = Self;

    fn sub(self, other: Self) -> Self {
        Self::new(self.x - other.x, self.y - other.y, self.z - other.z)
    }
}

/// A floor position in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Pos2 {
    pub x: f64,
    pub y: f64,
}

impl Pos2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    /// Euclidean distance to `other`.
    pub fn distance(self, other: Self) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        libm::sqrt(dx * dx + dy * dy)
    }
}

/// One timestamped magnetometer + accelerometer reading.
///
/// The gyroscope channel is carried through ingestion untouched; no feature
/// uses it.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SensorSample {
    pub timestamp_us: u64,
    /// Magnetic field, µT.
    pub mag: Vec3,
    /// Acceleration including gravity, m/s².
    pub acc: Vec3,
    /// Angular rate, preserved but unused.
    pub gyro: Vec3,
}

/// The orientation-tolerant feature pair every matcher compares.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FeatureVec {
    /// Vertical component (signed), µT.
    pub mv: f64,
    /// Horizontal component (a norm, never negative), µT.
    pub mh: f64,
}

impl FeatureVec {
    pub const fn new(mv: f64, mh: f64) -> Self {
        Self { mv, mh }
    }
}

/// A surveyed reference point.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RefPoint {
    pub point_id: u32,
    pub path_id: u32,
    /// 0-based index within the owning path.
    pub seq: u32,
    pub pos: Pos2,
    pub feat: FeatureVec,
}

/// An ordered walkable run of reference points.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RefPath {
    pub path_id: u32,
    pub points: Vec<RefPoint>,
}

impl RefPath {
    /// Number of points.
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Walking direction of a window relative to its path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Direction {
    Forward,
    Reversed,
}

impl Direction {
    /// The other direction.
    pub fn flip(self) -> Self {
        match self {
            Direction::Forward => Direction::Reversed,
            Direction::Reversed => Direction::Forward,
        }
    }
}

/// Identity of a window. The derived ordering is the canonical candidate
/// order `(path_id, start, direction)` with forward before reversed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WindowId {
    pub path_id: u32,
    pub start: u32,
    pub direction: Direction,
}

/// A fixed-length run of consecutive path points, the unit of path and DTW
/// matching. `start` always refers to the forward index on the path, so a
/// reversed window shares its forward twin's `start`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Window {
    pub id: WindowId,
    pub feats: Vec<FeatureVec>,
    pub coords: Vec<Pos2>,
}

impl Window {
    /// Number of points in the window.
    pub fn len(&self) -> usize {
        self.feats.len()
    }

    pub fn is_empty(&self) -> bool {
        self.feats.is_empty()
    }

    /// The same points walked the other way.
    pub fn reversed(&self) -> Self {
        let mut feats = self.feats.clone();
        let mut coords = self.coords.clone();
        feats.reverse();
        coords.reverse();
        Self {
            id: WindowId {
                direction: self.id.direction.flip(),
                ..self.id
            },
            feats,
            coords,
        }
    }
}

/// One breach of a map invariant.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    DuplicatePathId {
        path_id: u32,
    },
    DuplicatePointId {
        point_id: u32,
    },
    DuplicateSeq {
        path_id: u32,
        seq: u32,
    },
    /// A point stored under a path whose id differs from its own `path_id`.
    ForeignPoint {
        path_id: u32,
        point_id: u32,
    },
    EmptyPath {
        path_id: u32,
    },
    PathShorterThanWindow {
        path_id: u32,
        len: usize,
        window: usize,
    },
    NegativeMh {
        point_id: u32,
    },
    NonFinite {
        point_id: u32,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Violation::DuplicatePathId { path_id } => write!(f, "duplicate path_id {path_id}"),
            Violation::DuplicatePointId { point_id } => {
                write!(f, "duplicate point_id {point_id}")
            }
            Violation::DuplicateSeq { path_id, seq } => {
                write!(f, "duplicate (path_id, seq) = ({path_id}, {seq})")
            }
            Violation::ForeignPoint { path_id, point_id } => {
                write!(
                    f,
                    "point {point_id} stored under path {path_id} with a different path_id"
                )
            }
            Violation::EmptyPath { path_id } => write!(f, "path {path_id} is empty"),
            Violation::PathShorterThanWindow {
                path_id,
                len,
                window,
            } => write!(
                f,
                "path {path_id} shorter than window ({len} points < {window})"
            ),
            Violation::NegativeMh { point_id } => write!(f, "point {point_id} has mh < 0"),
            Violation::NonFinite { point_id } => {
                write!(f, "point {point_id} has a non-finite coordinate or feature")
            }
        }
    }
}

/// Checks every type invariant of `map`, returning one record per breach.
/// An empty result means the map is well formed. When `window` is given,
/// paths shorter than it are reported as well.
pub fn validate_map(map: &FingerprintMap, window: Option<usize>) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut path_ids = BTreeSet::new();
    let mut point_ids = BTreeSet::new();
    let mut seqs = BTreeSet::new();

    for path in &map.paths {
        if !path_ids.insert(path.path_id) {
            out.push(Violation::DuplicatePathId {
                path_id: path.path_id,
            });
        }
        if path.points.is_empty() {
            out.push(Violation::EmptyPath {
                path_id: path.path_id,
            });
        }
        if let Some(m) = window {
            if !path.points.is_empty() && path.len() < m {
                out.push(Violation::PathShorterThanWindow {
                    path_id: path.path_id,
                    len: path.len(),
                    window: m,
                });
            }
        }
        for p in &path.points {
            if p.path_id != path.path_id {
                out.push(Violation::ForeignPoint {
                    path_id: path.path_id,
                    point_id: p.point_id,
                });
            }
            if !point_ids.insert(p.point_id) {
                out.push(Violation::DuplicatePointId {
                    point_id: p.point_id,
                });
            }
            if !seqs.insert((p.path_id, p.seq)) {
                out.push(Violation::DuplicateSeq {
                    path_id: p.path_id,
                    seq: p.seq,
                });
            }
            let finite = [p.pos.x, p.pos.y, p.feat.mv, p.feat.mh]
                .iter()
                .all(|v| v.is_finite());
            if !finite {
                out.push(Violation::NonFinite {
                    point_id: p.point_id,
                });
            } else if p.feat.mh < 0.0 {
                out.push(Violation::NegativeMh {
                    point_id: p.point_id,
                });
            }
        }
    }
    out
}
