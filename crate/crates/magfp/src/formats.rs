//! CSV file formats.
//!
//! | file          | columns                                             |
//! |---------------|-----------------------------------------------------|
//! | map           | `point_id,path_id,seq,x_m,y_m,mv,mh`                |
//! | sensor log    | `timestamp_us,mx,my,mz,ax,ay,az,gx,gy,gz`           |
//! | markers       | `timestamp_us,x_m,y_m`                              |
//! | path features | `x_m,y_m,mv,mh`                                     |
//! | targets       | `case_id,seq,x_m,y_m,mv,mh` (x/y may be left blank) |
//! | heatmap       | `x_m,y_m,error_m`                                   |
//!
//! All files are UTF-8 with a header row. `seq` is 0-based. Lines starting
//! with `#` are comments; the map format uses them to carry its spacing and
//! metadata (`# spacing_m=0.3`, `# meta.site=north hall`). Floats are written
//! in shortest round-trip form.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use csv::{ReaderBuilder, StringRecord};
use magfp_core::features::Marker;
use magfp_core::store::DEFAULT_SPACING_M;
use magfp_core::{
    FeatureVec, FingerprintMap, HeatCell, Pos2, RefPath, RefPoint, SensorSample, Vec3,
};
use thiserror::Error;

pub const MAP_COLUMNS: [&str; 7] = ["point_id", "path_id", "seq", "x_m", "y_m", "mv", "mh"];
pub const LOG_COLUMNS: [&str; 10] = [
    "timestamp_us",
    "mx",
    "my",
    "mz",
    "ax",
    "ay",
    "az",
    "gx",
    "gy",
    "gz",
];
pub const MARKER_COLUMNS: [&str; 3] = ["timestamp_us", "x_m", "y_m"];
pub const FEATURE_COLUMNS: [&str; 4] = ["x_m", "y_m", "mv", "mh"];
pub const TARGET_COLUMNS: [&str; 6] = ["case_id", "seq", "x_m", "y_m", "mv", "mh"];
pub const HEATMAP_COLUMNS: [&str; 3] = ["x_m", "y_m", "error_m"];

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {msg}")]
    Parse { line: u64, msg: String },
    #[error("missing column `{0}`")]
    Schema(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Write(#[from] std::io::Error),
    #[error("cannot store {0}")]
    Unrepresentable(String),
}

impl FormatError {
    fn parse(line: u64, msg: impl Into<String>) -> Self {
        FormatError::Parse {
            line,
            msg: msg.into(),
        }
    }
}

pub fn open(path: &Path) -> Result<BufReader<File>, FormatError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|source| FormatError::Io {
            path: path.display().to_string(),
            source,
        })
}

pub fn create(path: &Path) -> Result<BufWriter<File>, FormatError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|source| FormatError::Io {
            path: path.display().to_string(),
            source,
        })
}

/// Column lookup by name over one header row.
struct Columns {
    idx: Vec<usize>,
}

impl Columns {
    fn new(header: &StringRecord, want: &[&str]) -> Result<Self, FormatError> {
        let idx = want
            .iter()
            .map(|name| {
                header
                    .iter()
                    .position(|h| h.trim() == *name)
                    .ok_or_else(|| FormatError::Schema((*name).to_string()))
            })
            .collect::<Result<_, _>>()?;
        Ok(Self { idx })
    }

    fn raw<'r>(&self, rec: &'r StringRecord, col: usize) -> &'r str {
        rec.get(self.idx[col]).unwrap_or("").trim()
    }
}

struct Row<'a> {
    rec: &'a StringRecord,
    cols: &'a Columns,
    names: &'a [&'a str],
    line: u64,
}

impl Row<'_> {
    fn str(&self, col: usize) -> &str {
        self.cols.raw(self.rec, col)
    }

    fn num<T: std::str::FromStr>(&self, col: usize) -> Result<T, FormatError> {
        let s = self.str(col);
        s.parse().map_err(|_| {
            FormatError::parse(
                self.line,
                format!("`{}`: not a valid number: {s:?}", self.names[col]),
            )
        })
    }

    fn float(&self, col: usize) -> Result<f64, FormatError> {
        let v: f64 = self.num(col)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(FormatError::parse(
                self.line,
                format!("`{}`: value must be finite", self.names[col]),
            ))
        }
    }

    fn opt_float(&self, col: usize) -> Result<Option<f64>, FormatError> {
        if self.str(col).is_empty() {
            Ok(None)
        } else {
            self.float(col).map(Some)
        }
    }
}

/// Streams the rows of a headed CSV, handing each one to `f`. Returns the
/// `#` comment lines that precede the header.
fn read_rows<R: Read>(
    mut input: R,
    names: &[&str],
    mut f: impl FnMut(Row<'_>) -> Result<(), FormatError>,
) -> Result<Vec<String>, FormatError> {
    let mut text = String::new();
    input
        .read_to_string(&mut text)
        .map_err(FormatError::Write)?;
    let comments = text
        .lines()
        .take_while(|l| l.trim_start().starts_with('#'))
        .map(|l| l.trim_start()[1..].trim().to_string())
        .collect();

    let mut rdr = ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = rdr.headers()?.clone();
    let cols = Columns::new(&header, names)?;
    let mut rec = StringRecord::new();
    loop {
        match rdr.read_record(&mut rec) {
            Ok(true) => {}
            Ok(false) => break,
            Err(e) => {
                let line = e.position().map(|p| p.line()).unwrap_or(0);
                return Err(FormatError::parse(line, e.to_string()));
            }
        }
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        f(Row {
            rec: &rec,
            cols: &cols,
            names,
            line,
        })?;
    }
    Ok(comments)
}

fn write_header<W: Write>(out: &mut W, names: &[&str]) -> std::io::Result<()> {
    writeln!(out, "{}", names.join(","))
}

/// Reads a fingerprint map. Rows may come in any order; paths are sorted by
/// `path_id` and points by `seq`.
pub fn read_map<R: Read>(input: R) -> Result<FingerprintMap, FormatError> {
    let mut paths: BTreeMap<u32, Vec<RefPoint>> = BTreeMap::new();
    let comments = read_rows(input, &MAP_COLUMNS, |r| {
        let p = RefPoint {
            point_id: r.num(0)?,
            path_id: r.num(1)?,
            seq: r.num(2)?,
            pos: Pos2::new(r.float(3)?, r.float(4)?),
            feat: FeatureVec::new(r.float(5)?, r.float(6)?),
        };
        if p.feat.mh < 0.0 {
            return Err(FormatError::parse(r.line, "`mh`: must not be negative"));
        }
        paths.entry(p.path_id).or_default().push(p);
        Ok(())
    })?;

    let mut spacing_m = DEFAULT_SPACING_M;
    let mut meta = BTreeMap::new();
    for c in comments {
        let Some((k, v)) = c.split_once('=') else {
            continue;
        };
        let (k, v) = (k.trim(), v.trim());
        if k == "spacing_m" {
            spacing_m = v
                .parse()
                .map_err(|_| FormatError::parse(0, "bad spacing_m comment"))?;
        } else if let Some(key) = k.strip_prefix("meta.") {
            meta.insert(key.to_string(), v.to_string());
        }
    }

    let paths = paths
        .into_iter()
        .map(|(path_id, mut points)| {
            points.sort_by_key(|p| p.seq);
            RefPath { path_id, points }
        })
        .collect();
    Ok(FingerprintMap {
        paths,
        spacing_m,
        meta,
    })
}

fn check_meta(s: &str, is_key: bool) -> Result<(), FormatError> {
    if s.contains('\n') || s.contains('\r') || (is_key && s.contains('=')) || s.trim() != s {
        return Err(FormatError::Unrepresentable(format!(
            "metadata entry {s:?}"
        )));
    }
    Ok(())
}

/// Writes a map with rows sorted by `(path_id, seq)`.
pub fn write_map<W: Write>(mut out: W, map: &FingerprintMap) -> Result<(), FormatError> {
    writeln!(out, "# spacing_m={}", map.spacing_m)?;
    for (k, v) in &map.meta {
        check_meta(k, true)?;
        check_meta(v, false)?;
        writeln!(out, "# meta.{k}={v}")?;
    }
    write_header(&mut out, &MAP_COLUMNS)?;
    let normalized = map.normalized();
    for p in normalized.points() {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            p.point_id, p.path_id, p.seq, p.pos.x, p.pos.y, p.feat.mv, p.feat.mh
        )?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a sensor log; timestamps must not decrease.
pub fn read_sensor_log<R: Read>(input: R) -> Result<Vec<SensorSample>, FormatError> {
    let mut out: Vec<SensorSample> = Vec::new();
    read_rows(input, &LOG_COLUMNS, |r| {
        let v = |i| r.float(i);
        let s = SensorSample {
            timestamp_us: r.num(0)?,
            mag: Vec3::new(v(1)?, v(2)?, v(3)?),
            acc: Vec3::new(v(4)?, v(5)?, v(6)?),
            gyro: Vec3::new(v(7)?, v(8)?, v(9)?),
        };
        if out.last().is_some_and(|p| p.timestamp_us > s.timestamp_us) {
            return Err(FormatError::parse(r.line, "timestamp_us decreases"));
        }
        out.push(s);
        Ok(())
    })?;
    Ok(out)
}

pub fn write_sensor_log<W: Write>(mut out: W, log: &[SensorSample]) -> Result<(), FormatError> {
    write_header(&mut out, &LOG_COLUMNS)?;
    for s in log {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            s.timestamp_us,
            s.mag.x,
            s.mag.y,
            s.mag.z,
            s.acc.x,
            s.acc.y,
            s.acc.z,
            s.gyro.x,
            s.gyro.y,
            s.gyro.z
        )?;
    }
    out.flush()?;
    Ok(())
}

/// Reads position markers; they must be sorted by timestamp.
pub fn read_markers<R: Read>(input: R) -> Result<Vec<Marker>, FormatError> {
    let mut out: Vec<Marker> = Vec::new();
    read_rows(input, &MARKER_COLUMNS, |r| {
        let m = Marker {
            timestamp_us: r.num(0)?,
            pos: Pos2::new(r.float(1)?, r.float(2)?),
        };
        if out.last().is_some_and(|p| p.timestamp_us > m.timestamp_us) {
            return Err(FormatError::parse(
                r.line,
                "markers must be sorted by timestamp_us",
            ));
        }
        out.push(m);
        Ok(())
    })?;
    Ok(out)
}

pub fn write_markers<W: Write>(mut out: W, markers: &[Marker]) -> Result<(), FormatError> {
    write_header(&mut out, &MARKER_COLUMNS)?;
    for m in markers {
        writeln!(out, "{},{},{}", m.timestamp_us, m.pos.x, m.pos.y)?;
    }
    out.flush()?;
    Ok(())
}

/// Reads one surveyed path's `(position, features)` rows.
pub fn read_path_features<R: Read>(input: R) -> Result<Vec<(Pos2, FeatureVec)>, FormatError> {
    let mut out = Vec::new();
    read_rows(input, &FEATURE_COLUMNS, |r| {
        out.push((
            Pos2::new(r.float(0)?, r.float(1)?),
            FeatureVec::new(r.float(2)?, r.float(3)?),
        ));
        Ok(())
    })?;
    Ok(out)
}

pub fn write_path_features<W: Write>(
    mut out: W,
    rows: &[(Pos2, FeatureVec)],
) -> Result<(), FormatError> {
    write_header(&mut out, &FEATURE_COLUMNS)?;
    for (p, f) in rows {
        writeln!(out, "{},{},{},{}", p.x, p.y, f.mv, f.mh)?;
    }
    out.flush()?;
    Ok(())
}

/// One matching query: a trajectory of features, with its true coordinates
/// when they are known.
#[derive(Debug, Clone, PartialEq)]
pub struct Target {
    pub case_id: u64,
    pub feats: Vec<FeatureVec>,
    pub coords: Option<Vec<Pos2>>,
}

/// Reads targets grouped by `case_id` (in order of first appearance). Each
/// case's `seq` values must be exactly `0..n`. Coordinates must be either
/// present on every row of a case or blank on every row.
pub fn read_targets<R: Read>(input: R) -> Result<Vec<Target>, FormatError> {
    type Rows = Vec<(u32, FeatureVec, Option<Pos2>, u64)>;
    let mut order: Vec<u64> = Vec::new();
    let mut cases: BTreeMap<u64, Rows> = BTreeMap::new();
    read_rows(input, &TARGET_COLUMNS, |r| {
        let case_id: u64 = r.num(0)?;
        let seq: u32 = r.num(1)?;
        let pos = match (r.opt_float(2)?, r.opt_float(3)?) {
            (Some(x), Some(y)) => Some(Pos2::new(x, y)),
            (None, None) => None,
            _ => {
                return Err(FormatError::parse(
                    r.line,
                    "x_m and y_m must both be set or both blank",
                ))
            }
        };
        let feat = FeatureVec::new(r.float(4)?, r.float(5)?);
        let rows = cases.entry(case_id).or_insert_with(|| {
            order.push(case_id);
            Vec::new()
        });
        rows.push((seq, feat, pos, r.line));
        Ok(())
    })?;

    order
        .into_iter()
        .map(|case_id| {
            let mut rows = cases.remove(&case_id).unwrap_or_default();
            rows.sort_by_key(|r| r.0);
            for (i, row) in rows.iter().enumerate() {
                if row.0 as usize != i {
                    return Err(FormatError::parse(
                        row.3,
                        format!("case {case_id}: seq values must run 0..n without gaps"),
                    ));
                }
            }
            let known = rows.iter().filter(|r| r.2.is_some()).count();
            let coords = match known {
                0 => None,
                n if n == rows.len() => Some(rows.iter().filter_map(|r| r.2).collect()),
                _ => {
                    return Err(FormatError::parse(
                        rows[0].3,
                        format!("case {case_id}: coordinates missing on some rows"),
                    ))
                }
            };
            Ok(Target {
                case_id,
                feats: rows.iter().map(|r| r.1).collect(),
                coords,
            })
        })
        .collect()
}

pub fn write_targets<W: Write>(mut out: W, targets: &[Target]) -> Result<(), FormatError> {
    write_header(&mut out, &TARGET_COLUMNS)?;
    for t in targets {
        for (seq, f) in t.feats.iter().enumerate() {
            match t.coords.as_ref().and_then(|c| c.get(seq)) {
                Some(p) => writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    t.case_id, seq, p.x, p.y, f.mv, f.mh
                )?,
                None => writeln!(out, "{},{},,,{},{}", t.case_id, seq, f.mv, f.mh)?,
            }
        }
    }
    out.flush()?;
    Ok(())
}

pub fn write_heatmap<W: Write>(mut out: W, cells: &[HeatCell]) -> Result<(), FormatError> {
    write_header(&mut out, &HEATMAP_COLUMNS)?;
    for c in cells {
        writeln!(out, "{},{},{}", c.x_m, c.y_m, c.error_m)?;
    }
    out.flush()?;
    Ok(())
}
