//! Fingerprint maps and window enumeration.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::model::{Direction, FeatureVec, Pos2, RefPath, RefPoint, Window, WindowId};

/// Default reference point spacing, meters.
pub const DEFAULT_SPACING_M: f64 = 0.30;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StoreError {
    DuplicatePathId(u32),
    EmptyPath(u32),
    WindowTooShort(usize),
}

impl fmt::Display for StoreError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StoreError::DuplicatePathId(id) => write!(f, "duplicate path_id {id}"),
            StoreError::EmptyPath(id) => write!(f, "path {id} has no points"),
            StoreError::WindowTooShort(m) => write!(f, "window length {m} is below 2"),
        }
    }
}

impl core::error::Error for StoreError {}

/// The offline-phase database: every surveyed path with its points.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FingerprintMap {
    pub paths: Vec<RefPath>,
    pub spacing_m: f64,
    /// Free-form metadata such as site name or survey date.
    pub meta: BTreeMap<String, String>,
}

impl FingerprintMap {
    /// Total number of reference points over all paths.
    pub fn n_points(&self) -> usize {
        self.paths.iter().map(RefPath::len).sum()
    }

    /// All points, path by path in storage order.
    pub fn points(&self) -> impl Iterator<Item = &RefPoint> + '_ {
        self.paths.iter().flat_map(|p| p.points.iter())
    }

    /// Looks a path up by id.
    pub fn path(&self, path_id: u32) -> Option<&RefPath> {
        self.paths.iter().find(|p| p.path_id == path_id)
    }

    /// Materializes the window named by `id`, if the map contains it.
    pub fn window(&self, id: WindowId, len: usize) -> Option<Window> {
        let path = self.path(id.path_id)?;
        let start = id.start as usize;
        let pts = path.points.get(start..start.checked_add(len)?)?;
        let w = Window {
            id: WindowId {
                direction: Direction::Forward,
                ..id
            },
            feats: pts.iter().map(|p| p.feat).collect(),
            coords: pts.iter().map(|p| p.pos).collect(),
        };
        Some(match id.direction {
            Direction::Forward => w,
            Direction::Reversed => w.reversed(),
        })
    }

    /// The same map with paths sorted by `path_id` and points by `seq`, the
    /// order the CSV format stores them in.
    pub fn normalized(&self) -> Self {
        let mut out = self.clone();
        out.paths.sort_by_key(|p| p.path_id);
        for p in &mut out.paths {
            p.points.sort_by_key(|q| q.seq);
        }
        out
    }

    /// Axis-aligned bounds of all point positions, `None` for an empty map.
    pub fn bounds(&self) -> Option<(Pos2, Pos2)> {
        let mut it = self.points().map(|p| p.pos);
        let first = it.next()?;
        Some(it.fold((first, first), |(lo, hi), p| {
            (
                Pos2::new(lo.x.min(p.x), lo.y.min(p.y)),
                Pos2::new(hi.x.max(p.x), hi.y.max(p.y)),
            )
        }))
    }
}

/// Builds a map from surveyed paths. `seq` follows input order within each
/// path; `point_id` is assigned densely across all paths in input order.
pub fn build_map(
    paths: Vec<(u32, Vec<(Pos2, FeatureVec)>)>,
    spacing_m: f64,
) -> Result<FingerprintMap, StoreError> {
    let mut seen = BTreeSet::new();
    let mut next_id = 0u32;
    let mut out = Vec::with_capacity(paths.len());
    for (path_id, pts) in paths {
        if !seen.insert(path_id) {
            return Err(StoreError::DuplicatePathId(path_id));
        }
        if pts.is_empty() {
            return Err(StoreError::EmptyPath(path_id));
        }
        let points = pts
            .into_iter()
            .enumerate()
            .map(|(seq, (pos, feat))| {
                let p = RefPoint {
                    point_id: next_id,
                    path_id,
                    seq: seq as u32,
                    pos,
                    feat,
                };
                next_id += 1;
                p
            })
            .collect();
        out.push(RefPath { path_id, points });
    }
    Ok(FingerprintMap {
        paths: out,
        spacing_m,
        meta: BTreeMap::new(),
    })
}

/// Windows of one length over a map, in canonical order.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowSet {
    pub windows: Vec<Window>,
    pub window_len: usize,
    /// Paths skipped because they are shorter than the window.
    pub skipped_paths: usize,
}

/// Every run of `m` consecutive points on every path: `L - m + 1` windows per
/// path of length `L`, plus each one reversed when `include_reversed` is set.
/// Output is sorted by `(path_id, start, direction)`.
pub fn enumerate_windows(
    map: &FingerprintMap,
    m: usize,
    include_reversed: bool,
) -> Result<WindowSet, StoreError> {
    if m < 2 {
        return Err(StoreError::WindowTooShort(m));
    }
    let mut paths: Vec<&RefPath> = map.paths.iter().collect();
    paths.sort_by_key(|p| p.path_id);

    let mut windows = Vec::new();
    let mut skipped_paths = 0;
    for path in paths {
        if path.len() < m {
            skipped_paths += 1;
            continue;
        }
        for (start, pts) in path.points.windows(m).enumerate() {
            let fwd = Window {
                id: WindowId {
                    path_id: path.path_id,
                    start: start as u32,
                    direction: Direction::Forward,
                },
                feats: pts.iter().map(|p| p.feat).collect(),
                coords: pts.iter().map(|p| p.pos).collect(),
            };
            let rev = include_reversed.then(|| fwd.reversed());
            windows.push(fwd);
            windows.extend(rev);
        }
    }
    Ok(WindowSet {
        windows,
        window_len: m,
        skipped_paths,
    })
}
