//! The `magfp` command-line driver.
//!
//! Exit codes: 0 success, 2 input error, 3 data-quality error, 4 matching
//! impossible (no candidates).

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use magfp_core::features::{extract, select_marker_samples, FeatureError};
use magfp_core::synthetic::{random_warp_ops, synthesize_sensor_log};
use magfp_core::{
    build_map, enumerate_windows, generate_survey, validate_map, warp_replay, Algorithm, DtwParams,
    ExtractionMode, FeatureVec, FieldModel, Floor, MatchError, MatchParams, Matcher, SurveyParams,
    WarpKind, WarpOp, Window,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::bench::{benchmark, BenchError};
use crate::config::{scan_args, Config};
use crate::formats::{self, FormatError, Target};
use crate::parallel::par_match_targets;
use crate::reports::{evaluate_results, heatmap, MatchRecord, ResultsFile};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "MAGFP_OUT_DIR";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    DataQuality(String),
    #[error("{0}")]
    NoCandidates(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::DataQuality(_) => 3,
            CliError::NoCandidates(_) => 4,
        }
    }
}

fn input(e: impl std::fmt::Display) -> CliError {
    CliError::Input(e.to_string())
}

fn in_file(path: &Path) -> impl Fn(FormatError) -> CliError + '_ {
    move |e| CliError::Input(format!("{}: {e}", path.display()))
}

#[derive(Debug, Parser)]
#[command(
    name = "magfp",
    version,
    about = "Magnetic fingerprint indoor positioning"
)]
#[command(args_override_self = true)]
pub struct Cli {
    /// `key = value` file supplying default flags for the subcommand
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Directory that relative output paths are written under
    #[arg(long, global = true, env = OUT_DIR_ENV, value_name = "DIR")]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Turn a sensor log plus position markers into path features
    Extract(ExtractArgs),
    /// Assemble path feature files into a fingerprint map
    Build(BuildArgs),
    /// Check a map for invariant violations
    Validate(ValidateArgs),
    /// Match target trajectories against a map
    Match(MatchArgs),
    /// Score match results against true coordinates
    Evaluate(EvaluateArgs),
    /// Time the matching algorithms on a workload
    Bench(BenchArgs),
    /// Generate a synthetic survey, targets and sensor logs
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    /// Device z-axis vertical; acceleration ignored
    Aligned,
    /// Any attitude; vertical taken from the accelerometer
    Projected,
}

impl From<ModeArg> for ExtractionMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Aligned => ExtractionMode::Aligned,
            ModeArg::Projected => ExtractionMode::Projected,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum AlgorithmArg {
    Point,
    Path,
    Dtw,
}

impl From<AlgorithmArg> for Algorithm {
    fn from(a: AlgorithmArg) -> Self {
        match a {
            AlgorithmArg::Point => Algorithm::Point,
            AlgorithmArg::Path => Algorithm::Path,
            AlgorithmArg::Dtw => Algorithm::Dtw,
        }
    }
}

#[derive(Debug, Args)]
struct ExtractArgs {
    /// Sensor log CSV (timestamp_us,mx,my,mz,ax,ay,az,gx,gy,gz)
    #[arg(long)]
    log: PathBuf,
    /// Marker CSV (timestamp_us,x_m,y_m)
    #[arg(long)]
    markers: PathBuf,
    #[arg(long, value_enum, default_value = "aligned")]
    mode: ModeArg,
    /// Output path feature CSV (x_m,y_m,mv,mh); stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BuildArgs {
    /// Path feature CSVs, one per path
    #[arg(long, num_args = 1.., required = true)]
    features: Vec<PathBuf>,
    /// Comma-separated path ids, one per feature file; defaults to 0,1,2,...
    #[arg(long)]
    path_ids: Option<String>,
    /// Reference point spacing, meters
    #[arg(long, default_value_t = 0.30)]
    spacing: f64,
    /// Site name stored in the map metadata
    #[arg(long)]
    site: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    #[arg(long)]
    map: PathBuf,
    /// Also flag paths shorter than this window length
    #[arg(long)]
    window: Option<usize>,
}

#[derive(Debug, Args)]
struct MatchOpts {
    /// Window length M for path and DTW matching
    #[arg(long, default_value_t = 20)]
    window: usize,
    /// Also match against every window walked backwards
    #[arg(long)]
    reversed: bool,
    /// Sakoe-Chiba band half-width for DTW
    #[arg(long)]
    dtw_band: Option<usize>,
    /// Spread the work over all cores
    #[arg(long)]
    parallel: bool,
}

impl MatchOpts {
    fn params(&self) -> MatchParams {
        MatchParams {
            window: self.window,
            include_reversed: self.reversed,
            dtw: DtwParams {
                band: self.dtw_band,
            },
        }
    }
}

#[derive(Debug, Args)]
struct MatchArgs {
    #[arg(long)]
    map: PathBuf,
    /// Target CSV (case_id,seq,x_m,y_m,mv,mh)
    #[arg(long)]
    targets: PathBuf,
    /// Point matching uses only each target's first sample
    #[arg(long, value_enum, default_value = "path")]
    algorithm: AlgorithmArg,
    #[command(flatten)]
    opts: MatchOpts,
    /// Results JSON; stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    /// Results JSON written by `match`
    #[arg(long)]
    results: PathBuf,
    /// Target CSV carrying the true coordinates
    #[arg(long)]
    truth: PathBuf,
    /// Report JSON; stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
    /// Heatmap CSV (x_m,y_m,error_m)
    #[arg(long)]
    heatmap: Option<PathBuf>,
    /// Heatmap cell side, meters
    #[arg(long, default_value_t = 5.0)]
    cell: f64,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[arg(long)]
    map: PathBuf,
    /// Target CSV; defaults to an exact replay of every map window
    #[arg(long)]
    targets: Option<PathBuf>,
    /// Comma-separated subset of point,path,dtw
    #[arg(long, default_value = "point,path,dtw")]
    algorithms: String,
    #[arg(long, default_value_t = 3)]
    reps: usize,
    #[command(flatten)]
    opts: MatchOpts,
    /// Timing JSON; stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// 24 paths of 20-50 points, 1024 points, 0.30 m spacing
    #[arg(long, conflicts_with_all = ["paths", "len", "total"])]
    paper_shape: bool,
    #[arg(long)]
    paths: Option<usize>,
    /// Path length, `N` or `MIN-MAX`
    #[arg(long)]
    len: Option<String>,
    /// Exact total number of points
    #[arg(long)]
    total: Option<usize>,
    #[arg(long)]
    spacing: Option<f64>,
    /// Floor size `WIDTHxHEIGHT` in meters
    #[arg(long, default_value = "100x70")]
    floor: String,
    /// Number of field sources; default one per 12 m² of floor
    #[arg(long)]
    sources: Option<usize>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Map CSV; stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write every window as a target CSV
    #[arg(long)]
    targets_out: Option<PathBuf>,
    /// Window length for targets
    #[arg(long, default_value_t = 20)]
    window: usize,
    /// Include reversed windows among the targets
    #[arg(long)]
    reversed: bool,
    /// Warp every target, e.g. `dup:3,drop:7` (indices into the window)
    #[arg(long, conflicts_with = "random_warp")]
    warp: Option<String>,
    /// Warp every target with 1..=K random duplications/drops
    #[arg(long)]
    random_warp: Option<usize>,
    /// Gaussian feature noise added to targets, µT
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    /// Directory for per-path sensor log and marker CSVs
    #[arg(long)]
    logs_out: Option<PathBuf>,
    /// Synthesize logs at random device attitudes (needs projected extraction)
    #[arg(long)]
    tilted: bool,
}

struct Ctx {
    out_dir: Option<PathBuf>,
}

impl Ctx {
    fn resolve(&self, p: &Path) -> PathBuf {
        match &self.out_dir {
            Some(d) if p.is_relative() => d.join(p),
            _ => p.to_path_buf(),
        }
    }

    /// Writes through `f` to the resolved `out`, or to stdout.
    fn emit(
        &self,
        out: Option<&Path>,
        f: impl FnOnce(&mut dyn Write) -> Result<(), FormatError>,
    ) -> Result<(), CliError> {
        match out {
            Some(p) => {
                let p = self.resolve(p);
                if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                    fs::create_dir_all(dir)
                        .map_err(|e| input(format!("{}: {e}", dir.display())))?;
                }
                let mut w = formats::create(&p).map_err(input)?;
                f(&mut w).map_err(|e| input(format!("{}: {e}", p.display())))
            }
            None => {
                let stdout = io::stdout();
                let mut lock = stdout.lock();
                f(&mut lock).map_err(input)
            }
        }
    }

    fn emit_json<T: serde::Serialize>(
        &self,
        out: Option<&Path>,
        value: &T,
    ) -> Result<(), CliError> {
        self.emit(out, |w| {
            serde_json::to_writer_pretty(&mut *w, value).map_err(io::Error::from)?;
            writeln!(w)?;
            w.flush()?;
            Ok(())
        })
    }
}

fn read_map(path: &Path) -> Result<magfp_core::FingerprintMap, CliError> {
    formats::open(path)
        .and_then(formats::read_map)
        .map_err(in_file(path))
}

fn read_targets(path: &Path) -> Result<Vec<Target>, CliError> {
    let t = formats::open(path)
        .and_then(formats::read_targets)
        .map_err(in_file(path))?;
    if t.is_empty() {
        return Err(input(format!("{}: no targets", path.display())));
    }
    Ok(t)
}

fn cmd_extract(ctx: &Ctx, a: &ExtractArgs) -> Result<(), CliError> {
    let log = formats::open(&a.log)
        .and_then(formats::read_sensor_log)
        .map_err(in_file(&a.log))?;
    let markers = formats::open(&a.markers)
        .and_then(formats::read_markers)
        .map_err(in_file(&a.markers))?;
    let picks = select_marker_samples(&log, &markers).map_err(input)?;
    let mode = ExtractionMode::from(a.mode);

    let mut rows = Vec::with_capacity(picks.len());
    let mut bad = Vec::new();
    for (&i, mk) in picks.iter().zip(&markers) {
        match extract(&log[i], mode) {
            Ok(f) => rows.push((mk.pos, f)),
            Err(FeatureError::DegenerateGravity { .. }) => bad.push(i),
            Err(e) => return Err(input(e)),
        }
    }
    if !bad.is_empty() {
        bad.dedup();
        let list: Vec<String> = bad
            .iter()
            .map(|&i| format!("row {} (timestamp_us={})", i + 1, log[i].timestamp_us))
            .collect();
        return Err(CliError::DataQuality(format!(
            "{}: {} sample(s) with degenerate gravity: {}",
            a.log.display(),
            bad.len(),
            list.join(", ")
        )));
    }
    ctx.emit(a.out.as_deref(), |w| formats::write_path_features(w, &rows))
}

fn cmd_build(ctx: &Ctx, a: &BuildArgs) -> Result<(), CliError> {
    let ids: Vec<u32> = match &a.path_ids {
        Some(s) => s
            .split(',')
            .map(|t| {
                t.trim()
                    .parse()
                    .map_err(|_| input(format!("bad path id {t:?}")))
            })
            .collect::<Result<_, _>>()?,
        None => (0..a.features.len() as u32).collect(),
    };
    if ids.len() != a.features.len() {
        return Err(input("--path-ids must name one id per feature file"));
    }
    let mut paths = Vec::with_capacity(ids.len());
    for (id, f) in ids.into_iter().zip(&a.features) {
        let rows = formats::open(f)
            .and_then(formats::read_path_features)
            .map_err(in_file(f))?;
        paths.push((id, rows));
    }
    let mut map = build_map(paths, a.spacing).map_err(input)?;
    if let Some(site) = &a.site {
        map.meta.insert("site".into(), site.clone());
    }
    ctx.emit(a.out.as_deref(), |w| formats::write_map(w, &map))
}

fn cmd_validate(a: &ValidateArgs) -> Result<(), CliError> {
    let map = read_map(&a.map)?;
    let v = validate_map(&map, a.window);
    if v.is_empty() {
        println!("ok: {} paths, {} points", map.paths.len(), map.n_points());
        return Ok(());
    }
    let lines: Vec<String> = v.iter().map(ToString::to_string).collect();
    Err(CliError::DataQuality(lines.join("\n")))
}

fn check_map(path: &Path, map: &magfp_core::FingerprintMap) -> Result<(), CliError> {
    match validate_map(map, None).first() {
        Some(v) => Err(input(format!("{}: invalid map: {v}", path.display()))),
        None => Ok(()),
    }
}

fn match_error(case_id: u64, e: MatchError) -> CliError {
    match e {
        MatchError::EmptyCandidates | MatchError::EmptyMap => {
            CliError::NoCandidates(format!("case {case_id}: {e}"))
        }
        _ => input(format!("case {case_id}: {e}")),
    }
}

fn cmd_match(ctx: &Ctx, a: &MatchArgs) -> Result<(), CliError> {
    let map = read_map(&a.map)?;
    check_map(&a.map, &map)?;
    let targets = read_targets(&a.targets)?;
    let algorithm = Algorithm::from(a.algorithm);
    let matcher = Matcher::new(&map, algorithm, a.opts.params()).map_err(input)?;

    let feats: Vec<&[FeatureVec]> = targets.iter().map(|t| t.feats.as_slice()).collect();
    let results = if a.opts.parallel {
        par_match_targets(&matcher, &feats)
    } else {
        feats.iter().map(|f| matcher.match_features(f)).collect()
    };
    let records = targets
        .iter()
        .zip(results)
        .map(|(t, r)| {
            let result = r.map_err(|e| match_error(t.case_id, e))?;
            Ok(MatchRecord {
                case_id: t.case_id,
                estimate: matcher.estimate_coords(&result),
                result,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;

    let file = ResultsFile {
        algorithm,
        params: matcher.params(),
        workload: matcher.descriptor(targets.len()),
        results: records,
    };
    ctx.emit_json(a.out.as_deref(), &file)
}

fn cmd_evaluate(ctx: &Ctx, a: &EvaluateArgs) -> Result<(), CliError> {
    let text = fs::read_to_string(&a.results)
        .map_err(|e| input(format!("{}: {e}", a.results.display())))?;
    let results: ResultsFile =
        serde_json::from_str(&text).map_err(|e| input(format!("{}: {e}", a.results.display())))?;
    let truth = formats::open(&a.truth)
        .and_then(formats::read_targets)
        .map_err(in_file(&a.truth))?;
    let (file, report) = evaluate_results(&results, &truth).map_err(input)?;
    if let Some(h) = &a.heatmap {
        let cells = heatmap(&report, a.cell).map_err(input)?;
        ctx.emit(Some(h), |w| formats::write_heatmap(w, &cells))?;
    }
    ctx.emit_json(a.out.as_deref(), &file)
}

fn parse_algorithms(s: &str) -> Result<Vec<Algorithm>, CliError> {
    s.split(',')
        .map(|t| match t.trim() {
            "point" => Ok(Algorithm::Point),
            "path" => Ok(Algorithm::Path),
            "dtw" => Ok(Algorithm::Dtw),
            other => Err(input(format!("unknown algorithm {other:?}"))),
        })
        .collect()
}

fn cmd_bench(ctx: &Ctx, a: &BenchArgs) -> Result<(), CliError> {
    let algorithms = parse_algorithms(&a.algorithms)?;
    if a.reps == 0 {
        return Err(input("--reps must be at least 1"));
    }
    let map = read_map(&a.map)?;
    check_map(&a.map, &map)?;
    let params = a.opts.params();
    let targets: Vec<Vec<FeatureVec>> = match &a.targets {
        Some(p) => read_targets(p)?.into_iter().map(|t| t.feats).collect(),
        None => {
            let ws =
                enumerate_windows(&map, params.window, params.include_reversed).map_err(input)?;
            ws.windows.into_iter().map(|w| w.feats).collect()
        }
    };
    let report = benchmark(&map, &targets, &algorithms, params, a.reps, a.opts.parallel).map_err(
        |e| match e {
            BenchError::NoTargets => CliError::NoCandidates(e.to_string()),
            other => input(other),
        },
    )?;
    ctx.emit_json(a.out.as_deref(), &report)
}

fn parse_len(s: &str) -> Result<(usize, usize), CliError> {
    let bad = || input(format!("--len expects N or MIN-MAX, got {s:?}"));
    match s.split_once('-') {
        Some((lo, hi)) => Ok((
            lo.trim().parse().map_err(|_| bad())?,
            hi.trim().parse().map_err(|_| bad())?,
        )),
        None => {
            let n = s.trim().parse().map_err(|_| bad())?;
            Ok((n, n))
        }
    }
}

fn parse_floor(s: &str) -> Result<Floor, CliError> {
    let bad = || input(format!("--floor expects WIDTHxHEIGHT, got {s:?}"));
    let (w, h) = s.split_once('x').ok_or_else(bad)?;
    let floor = Floor {
        width_m: w.trim().parse().map_err(|_| bad())?,
        height_m: h.trim().parse().map_err(|_| bad())?,
    };
    if !(floor.width_m > 0.0 && floor.height_m > 0.0) {
        return Err(bad());
    }
    Ok(floor)
}

/// Parses `dup:3,drop:7` into warp edits.
pub fn parse_warp(s: &str) -> Result<Vec<WarpOp>, String> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| {
            let (kind, idx) = t
                .trim()
                .split_once(':')
                .ok_or_else(|| format!("bad warp op {t:?}"))?;
            let kind = match kind {
                "dup" => WarpKind::Duplicate,
                "drop" => WarpKind::Drop,
                _ => return Err(format!("unknown warp kind {kind:?}")),
            };
            let index = idx.parse().map_err(|_| format!("bad warp index {idx:?}"))?;
            Ok(WarpOp { index, kind })
        })
        .collect()
}

/// Per-case seed derived from the run seed.
fn case_seed(seed: u64, case: u64, salt: u64) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(case.wrapping_mul(0xBF58_476D_1CE4_E5B9))
        .wrapping_add(salt)
}

fn synth_targets(a: &SynthArgs, windows: &[Window]) -> Result<Vec<Target>, CliError> {
    let fixed = a
        .warp
        .as_deref()
        .map(parse_warp)
        .transpose()
        .map_err(input)?;
    windows
        .iter()
        .enumerate()
        .map(|(i, w)| {
            let case = i as u64;
            let ops = match (&fixed, a.random_warp) {
                (Some(ops), _) => ops.clone(),
                (None, Some(k)) if k > 0 => {
                    let mut rng = ChaCha8Rng::seed_from_u64(case_seed(a.seed, case, 1));
                    let count = rng.random_range(1..=k);
                    random_warp_ops(w.len(), count, case_seed(a.seed, case, 2))
                }
                _ => Vec::new(),
            };
            let t = warp_replay(w, &ops, a.noise, case_seed(a.seed, case, 3))
                .map_err(|e| input(format!("window {i}: {e}")))?;
            Ok(Target {
                case_id: case,
                feats: t.feats,
                coords: Some(t.coords),
            })
        })
        .collect()
}

fn cmd_synth(ctx: &Ctx, a: &SynthArgs) -> Result<(), CliError> {
    let floor = parse_floor(&a.floor)?;
    let mut params = if a.paper_shape {
        SurveyParams::paper_shape()
    } else {
        let (min_len, max_len) = parse_len(a.len.as_deref().unwrap_or("20-50"))?;
        SurveyParams {
            n_paths: a.paths.unwrap_or(1),
            min_len,
            max_len,
            total_points: a.total,
            spacing_m: 0.30,
        }
    };
    if let Some(s) = a.spacing {
        params.spacing_m = s;
    }
    let model = match a.sources {
        Some(n) => FieldModel::random(floor, n, a.seed),
        None => FieldModel::for_floor(floor, a.seed),
    };
    let map = generate_survey(&model, params, a.seed).map_err(input)?;
    ctx.emit(a.out.as_deref(), |w| formats::write_map(w, &map))?;

    if let Some(t) = &a.targets_out {
        let ws = enumerate_windows(&map, a.window, a.reversed).map_err(input)?;
        let targets = synth_targets(a, &ws.windows)?;
        ctx.emit(Some(t), |w| formats::write_targets(w, &targets))?;
    }
    if let Some(dir) = &a.logs_out {
        for (k, path) in map.paths.iter().enumerate() {
            let (log, markers) =
                synthesize_sensor_log(path, 0, 50_000, a.tilted, case_seed(a.seed, k as u64, 4));
            let id = path.path_id;
            ctx.emit(Some(&dir.join(format!("path_{id}_log.csv"))), |w| {
                formats::write_sensor_log(w, &log)
            })?;
            ctx.emit(Some(&dir.join(format!("path_{id}_markers.csv"))), |w| {
                formats::write_markers(w, &markers)
            })?;
        }
    }
    Ok(())
}

const VALUED_GLOBALS: [&str; 2] = ["--config", "--out-dir"];

/// Splices config-file entries in front of the user's own flags so that the
/// latter take precedence.
fn expand_config(argv: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let (config, sub) = scan_args(&argv, &VALUED_GLOBALS);
    let (Some(path), Some(sub)) = (config, sub) else {
        return Ok(argv);
    };
    let text = fs::read_to_string(&path)
        .map_err(|e| input(format!("{}: {e}", Path::new(&path).display())))?;
    let cfg =
        Config::parse(&text).map_err(|e| input(format!("{}: {e}", Path::new(&path).display())))?;
    let mut out = vec![argv[0].clone(), argv[sub].clone()];
    out.extend(cfg.to_args());
    out.extend(argv[1..sub].iter().cloned());
    out.extend(argv[sub + 1..].iter().cloned());
    Ok(out)
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    let ctx = Ctx {
        out_dir: cli.out_dir,
    };
    match &cli.command {
        Command::Extract(a) => cmd_extract(&ctx, a),
        Command::Build(a) => cmd_build(&ctx, a),
        Command::Validate(a) => cmd_validate(a),
        Command::Match(a) => cmd_match(&ctx, a),
        Command::Evaluate(a) => cmd_evaluate(&ctx, a),
        Command::Bench(a) => cmd_bench(&ctx, a),
        Command::Synth(a) => cmd_synth(&ctx, a),
    }
}

/// Runs the CLI on `argv` and returns the process exit code.
pub fn run(argv: Vec<OsString>) -> i32 {
    let argv = match expand_config(argv) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
