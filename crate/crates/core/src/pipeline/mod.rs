//! Stage orchestration: config file, per-stage commands and run manifest.

pub mod tables;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::enrich::{enrich_trip, EnrichedPoint, Handedness};
use crate::error::{Error, Result};
use crate::evaluation::{evaluate_against_truth, parse_truth, write_report, EvaluationReport, RouteEdgeSet};
use crate::matcher::osrm::{to_osrm_response, MatchClient, RemoteConfig};
use crate::matcher::{annotate_with_network, match_segment, MatchedTrip, MatcherConfig};
use crate::metrics::{derive_variables, flag_stops, speed_histogram, StopConfig, VariablesRecord};
use crate::network::overpass::{OverpassClient, OverpassConfig};
use crate::network::{parse_osm, OsmFormat, RoadNetwork, SignalFilter};
use crate::preprocess::{parse_gpx, preprocess, write_gpx, PreprocessConfig, PreprocessReport, TripSegment};
use tables::*;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Backend {
    #[default]
    Builtin,
    Remote(RemoteConfig),
}

/// Run configuration, read from a TOML file. Relative paths are resolved
/// against the file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub input_dir: PathBuf,
    pub network_path: PathBuf,
    pub output_dir: PathBuf,
    /// Optional `trip_id,participant_id` table.
    #[serde(default)]
    pub participants_path: Option<PathBuf>,
    /// Optional ground-truth routes for `evaluate`.
    #[serde(default)]
    pub truth_path: Option<PathBuf>,
    /// Compare routes per traversal direction.
    #[serde(default = "yes")]
    pub directed_evaluation: bool,
    #[serde(default)]
    pub handedness: Handedness,
    #[serde(default = "one")]
    pub workers: usize,
    #[serde(default)]
    pub preprocess: PreprocessConfig,
    #[serde(default)]
    pub matcher: MatcherConfig,
    #[serde(default)]
    pub stops: StopConfig,
    #[serde(default)]
    pub backend: Backend,
    #[serde(default)]
    pub overpass: OverpassConfig,
}

fn yes() -> bool {
    true
}

fn one() -> usize {
    1
}

impl RunConfig {
    pub fn new(input_dir: impl Into<PathBuf>, network_path: impl Into<PathBuf>, output_dir: impl Into<PathBuf>) -> Self {
        RunConfig {
            input_dir: input_dir.into(),
            network_path: network_path.into(),
            output_dir: output_dir.into(),
            participants_path: None,
            truth_path: None,
            directed_evaluation: true,
            handedness: Handedness::default(),
            workers: 1,
            preprocess: PreprocessConfig::default(),
            matcher: MatcherConfig::default(),
            stops: StopConfig::default(),
            backend: Backend::default(),
            overpass: OverpassConfig::default(),
        }
    }

    pub fn from_toml(text: &str, base: &Path) -> Result<Self> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut cfg.input_dir);
        fix(&mut cfg.network_path);
        fix(&mut cfg.output_dir);
        cfg.participants_path.as_mut().map(fix);
        cfg.truth_path.as_mut().map(fix);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
        RunConfig::from_toml(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn validate(&self) -> Result<()> {
        if self.workers == 0 {
            return Err(Error::InvalidConfig("workers must be at least 1".into()));
        }
        self.preprocess.validate()?;
        self.matcher.validate()?;
        self.stops.validate()
    }

    fn out(&self, name: &str) -> PathBuf {
        self.output_dir.join(name)
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| Error::InvalidConfig(e.to_string()))
    }
}

/// Counts and timings of a run, merged stage by stage into `manifest.json`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub config: Option<RunConfig>,
    pub stages: BTreeMap<String, Value>,
}

impl RunManifest {
    fn path(cfg: &RunConfig) -> PathBuf {
        cfg.out("manifest.json")
    }

    pub fn load(cfg: &RunConfig) -> RunManifest {
        fs::read(Self::path(cfg))
            .ok()
            .and_then(|b| serde_json::from_slice(&b).ok())
            .unwrap_or_default()
    }

    fn record(cfg: &RunConfig, stage: &str, started: Instant, mut body: Value) -> Result<()> {
        let mut m = RunManifest::load(cfg);
        m.tool_version = env!("CARGO_PKG_VERSION").to_string();
        m.config = Some(cfg.clone());
        body["wall_time_s"] = json!(started.elapsed().as_secs_f64());
        m.stages.insert(stage.to_string(), body);
        write_json(&Self::path(cfg), &m)
    }
}

fn gpx_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = fs::read_dir(dir).map_err(|_| Error::NoInput(dir.to_path_buf()))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("gpx")))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::NoInput(dir.to_path_buf()));
    }
    Ok(files)
}

#[derive(Debug, Clone, Serialize)]
struct FileOutcome {
    file: String,
    bytes: u64,
    points_parsed: usize,
    missing_time: usize,
    segments: usize,
    report: Option<PreprocessReport>,
    warning: Option<String>,
}

fn preprocess_file(path: &Path, cfg: &PreprocessConfig) -> (FileOutcome, Vec<TripSegment>) {
    let trip_id = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let mut o = FileOutcome {
        file: path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(),
        bytes: 0,
        points_parsed: 0,
        missing_time: 0,
        segments: 0,
        report: None,
        warning: None,
    };
    let bytes = match fs::read(path) {
        Ok(b) => b,
        Err(e) => {
            o.warning = Some(e.to_string());
            return (o, Vec::new());
        }
    };
    o.bytes = bytes.len() as u64;
    if cfg.min_file_bytes.is_some_and(|min| o.bytes < min) {
        o.warning = Some(format!("skipped: {} bytes is below min_file_bytes", o.bytes));
        return (o, Vec::new());
    }
    let result = parse_gpx(&bytes, &trip_id).and_then(|parsed| {
        o.points_parsed = parsed.trajectory.len();
        o.missing_time = parsed.missing_time;
        preprocess(&parsed.trajectory, cfg)
    });
    match result {
        Ok(out) => {
            o.segments = out.segments.len();
            o.report = Some(out.report);
            (o, out.segments)
        }
        Err(e) => {
            o.warning = Some(e.to_string());
            (o, Vec::new())
        }
    }
}

/// Clean every GPX file of the input directory.
pub fn cmd_preprocess(cfg: &RunConfig) -> Result<Vec<TripSegment>> {
    let started = Instant::now();
    let files = gpx_files(&cfg.input_dir)?;
    fs::create_dir_all(cfg.out("cleaned"))?;
    let results: Vec<(FileOutcome, Vec<TripSegment>)> =
        cfg.pool()?.install(|| files.par_iter().map(|f| preprocess_file(f, &cfg.preprocess)).collect());
    let mut segments = Vec::new();
    let mut outcomes = Vec::new();
    for (o, segs) in results {
        if let Some(w) = &o.warning {
            warn!("{}: {w}", o.file);
        }
        outcomes.push(o);
        segments.extend(segs);
    }
    segments.sort_by(|a, b| (&a.trip_id, a.segment_index).cmp(&(&b.trip_id, b.segment_index)));
    for s in &segments {
        fs::write(cfg.out("cleaned").join(format!("{}.gpx", s.key())), write_gpx(s))?;
    }
    write_csv(&cfg.out(CLEANED_TRIP), segments.iter().flat_map(CleanedRow::rows))?;
    info!("preprocess: {} files, {} segments", files.len(), segments.len());
    let body = json!({
        "files_in": files.len(),
        "segments_out": segments.len(),
        "points_out": segments.iter().map(|s| s.points.len()).sum::<usize>(),
        "files": outcomes,
    });
    RunManifest::record(cfg, "preprocess", started, body)?;
    Ok(segments)
}

pub fn load_network(path: &Path) -> Result<RoadNetwork> {
    let fail = |reason: String| Error::NetworkLoadFailure { path: path.to_path_buf(), reason };
    let bytes = fs::read(path).map_err(|e| fail(e.to_string()))?;
    let load = parse_osm(&bytes, OsmFormat::sniff(&bytes), &SignalFilter::default()).map_err(|e| fail(e.to_string()))?;
    for w in &load.warnings {
        warn!("{}: {w}", path.display());
    }
    Ok(load.network)
}

fn read_segments(cfg: &RunConfig) -> Result<Vec<TripSegment>> {
    CleanedRow::segments(read_csv(&cfg.out(CLEANED_TRIP))?)
}

fn geojson(trip: &MatchedTrip) -> Value {
    let coords: Vec<[f64; 2]> = trip.points.iter().map(|p| [p.snapped.lon(), p.snapped.lat()]).collect();
    json!({
        "type": "FeatureCollection",
        "features": [{
            "type": "Feature",
            "geometry": {"type": "LineString", "coordinates": coords},
            "properties": {
                "trip_id": trip.trip_id,
                "segment_index": trip.segment_index,
                "distance_m": trip.total_distance_m(),
                "duration_s": trip.total_duration_s(),
                "points": trip.points.len(),
                "discarded": trip.discarded,
            }
        }]
    })
}

fn empty_match(seg: &TripSegment) -> MatchedTrip {
    MatchedTrip {
        trip_id: seg.trip_id.clone(),
        segment_index: seg.segment_index,
        points: Vec::new(),
        legs: Vec::new(),
        discarded: (0..seg.points.len()).collect(),
        log_probability: None,
    }
}

/// Match every cleaned segment with the configured backend.
pub fn cmd_match(cfg: &RunConfig) -> Result<Vec<MatchedTrip>> {
    let started = Instant::now();
    let segments = read_segments(cfg)?;
    let net = load_network(&cfg.network_path)?;
    for d in ["matched", "responses"] {
        fs::create_dir_all(cfg.out(d))?;
    }
    let results: Vec<(MatchedTrip, Value, Option<String>)> = match &cfg.backend {
        Backend::Builtin => cfg.pool()?.install(|| {
            segments
                .par_iter()
                .map(|s| match match_segment(&net, s, &cfg.matcher) {
                    Ok(t) => {
                        let resp = to_osrm_response(&t, s);
                        (t, resp, None)
                    }
                    Err(e) => {
                        let t = empty_match(s);
                        let resp = to_osrm_response(&t, s);
                        (t, resp, Some(e.to_string()))
                    }
                })
                .collect()
        }),
        Backend::Remote(remote) => {
            let client = MatchClient::new(remote.clone())?;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(remote.max_in_flight.max(1))
                .build()
                .map_err(|e| Error::InvalidConfig(e.to_string()))?;
            let out: Result<Vec<_>> = pool.install(|| {
                segments
                    .par_iter()
                    .map(|s| {
                        let m = client.remote_match(s)?;
                        let doc = m.response_document();
                        let mut t = m.trip;
                        annotate_with_network(&net, &mut t);
                        let warning = t.points.is_empty().then(|| "no match".to_string());
                        Ok((t, doc, warning))
                    })
                    .collect()
            });
            out?
        }
    };
    let mut warnings = Vec::new();
    let mut trips = Vec::new();
    for (t, resp, w) in results {
        if let Some(w) = w {
            warn!("{}: {w}", t.key());
            warnings.push(format!("{}: {w}", t.key()));
        }
        write_json(&cfg.out("matched").join(format!("{}.json", t.key())), &t)?;
        write_json(&cfg.out("matched").join(format!("{}.geojson", t.key())), &geojson(&t))?;
        write_json(&cfg.out("responses").join(format!("{}.json", t.key())), &resp)?;
        trips.push(t);
    }
    write_csv(&cfg.out(MATCHED_TRIP), trips.iter().flat_map(MatchedRow::rows))?;
    let points_in: usize = segments.iter().map(|s| s.points.len()).sum();
    let matched: usize = trips.iter().map(|t| t.points.len()).sum();
    let elapsed = started.elapsed().as_secs_f64();
    info!("match: {} segments, {matched}/{points_in} points", trips.len());
    let body = json!({
        "segments_in": segments.len(),
        "trips_matched": trips.iter().filter(|t| !t.points.is_empty()).count(),
        "points_in": points_in,
        "points_matched": matched,
        "points_discarded": points_in - matched,
        "points_per_second": if elapsed > 0.0 { points_in as f64 / elapsed } else { 0.0 },
        "warnings": warnings,
    });
    RunManifest::record(cfg, "match", started, body)?;
    Ok(trips)
}

fn read_matched(cfg: &RunConfig) -> Result<Vec<MatchedTrip>> {
    let table = cfg.out(MATCHED_TRIP);
    let rows: Vec<MatchedRow> = read_csv(&table)?;
    let mut keys: Vec<(String, usize)> = rows.iter().map(|r| (r.trip_id.clone(), r.segment_index)).collect();
    keys.dedup();
    let mut trips = Vec::new();
    for (trip_id, seg) in keys {
        let path = cfg.out("matched").join(format!("{trip_id}_{seg}.json"));
        let bytes = fs::read(&path).map_err(|_| Error::MissingStageOutput(path.clone()))?;
        trips.push(serde_json::from_slice::<MatchedTrip>(&bytes)?);
    }
    Ok(trips)
}

/// `trip_id -> participant_id` from the optional sidecar table.
fn participants(cfg: &RunConfig) -> Result<BTreeMap<String, String>> {
    #[derive(Deserialize)]
    struct Row {
        trip_id: String,
        participant_id: String,
    }
    let Some(path) = &cfg.participants_path else { return Ok(BTreeMap::new()) };
    if !path.exists() {
        return Ok(BTreeMap::new());
    }
    let rows: Vec<Row> = read_csv(path)?;
    Ok(rows.into_iter().map(|r| (r.trip_id, r.participant_id)).collect())
}

/// Participant of a trip: from the sidecar table, else the trip id up to
/// its first underscore.
pub fn participant_of(trip_id: &str, table: &BTreeMap<String, String>) -> String {
    table
        .get(trip_id)
        .cloned()
        .unwrap_or_else(|| trip_id.split('_').next().unwrap_or(trip_id).to_string())
}

/// Join matched trips with way tags and write the trip attributes table.
pub fn cmd_enrich(cfg: &RunConfig) -> Result<Vec<EnrichedPoint>> {
    let started = Instant::now();
    let trips = read_matched(cfg)?;
    let net = load_network(&cfg.network_path)?;
    let owners = participants(cfg)?;

    let mut unknown: Vec<i64> = trips
        .iter()
        .flat_map(|t| t.points.iter().filter_map(|p| p.way_id))
        .filter(|id| net.way(*id).is_none())
        .collect();
    unknown.sort_unstable();
    unknown.dedup();
    let backfill = if cfg.overpass.enabled && !unknown.is_empty() {
        Some(OverpassClient::new(&cfg.overpass)?.fetch_way_tags(&unknown)?)
    } else {
        None
    };

    let results: Vec<(Vec<EnrichedPoint>, Vec<String>)> = cfg.pool()?.install(|| {
        trips
            .par_iter()
            .map(|t| {
                let (mut rows, w) = enrich_trip(&net, t, cfg.handedness, &participant_of(&t.trip_id, &owners), backfill.as_ref());
                flag_stops(&mut rows, &cfg.stops);
                (rows, w)
            })
            .collect()
    });
    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    for (r, w) in results {
        rows.extend(r);
        warnings.extend(w);
    }
    for w in &warnings {
        warn!("{w}");
    }
    let table: Vec<AttributeRow> = rows.iter().map(AttributeRow::from_point).collect();
    write_csv(&cfg.out(TRIP_ATTRIBUTES), &table)?;
    fs::copy(cfg.out(TRIP_ATTRIBUTES), cfg.out(TRIP_ATTRIBUTES_ALIAS))?;
    let body = json!({
        "trips_in": trips.len(),
        "points_enriched": rows.len(),
        "ways_backfilled": backfill.as_ref().map_or(0, |b| b.len()),
        "warnings": warnings,
    });
    RunManifest::record(cfg, "enrich", started, body)?;
    Ok(rows)
}

/// Group attribute rows by participant and compute their variables.
pub fn variables_from_rows(mut rows: Vec<EnrichedPoint>, stops: &StopConfig) -> Result<Vec<VariablesRecord>> {
    rows.sort_by(|a, b| (&a.trip_id, a.segment_index, a.point_seq).cmp(&(&b.trip_id, b.segment_index, b.point_seq)));
    flag_stops(&mut rows, stops);
    let mut by_participant: BTreeMap<String, Vec<EnrichedPoint>> = BTreeMap::new();
    for r in rows {
        by_participant.entry(r.participant_id.clone()).or_default().push(r);
    }
    if by_participant.is_empty() {
        return Err(Error::ZeroDuration);
    }
    by_participant.iter().map(|(p, rows)| derive_variables(p, rows)).collect()
}

/// Derived variables per participant, from the trip attributes table.
pub fn cmd_derive(cfg: &RunConfig) -> Result<Vec<VariablesRecord>> {
    let started = Instant::now();
    let table: Vec<AttributeRow> = read_csv(&cfg.out(TRIP_ATTRIBUTES))?;
    let rows = table.iter().map(AttributeRow::to_point).collect::<Result<Vec<_>>>()?;
    let records = variables_from_rows(rows, &cfg.stops)?;
    write_csv(&cfg.out(VARIABLES), &records)?;
    write_csv(&cfg.out(SPEED_HISTOGRAM), speed_histogram(&records, 1.0))?;
    RunManifest::record(cfg, "derive", started, json!({"participants": records.len()}))?;
    Ok(records)
}

/// Error rates of matched segments listed in the truth file. Truth lines
/// are keyed by segment key (`trip_segment`) or by trip id.
pub fn cmd_evaluate(cfg: &RunConfig, truth_path: Option<&Path>) -> Result<Vec<EvaluationReport>> {
    let started = Instant::now();
    let truth_path = truth_path
        .map(Path::to_path_buf)
        .or_else(|| cfg.truth_path.clone())
        .ok_or_else(|| Error::InvalidConfig("no truth file given".into()))?;
    let text = fs::read_to_string(&truth_path).map_err(|_| Error::NoInput(truth_path.clone()))?;
    let truth = parse_truth(&text)?;
    let trips = read_matched(cfg)?;
    let net = load_network(&cfg.network_path)?;
    let mut reports = Vec::new();
    for t in &trips {
        let Some(nodes) = truth.get(&t.key()).or_else(|| truth.get(&t.trip_id)) else { continue };
        let set = RouteEdgeSet::from_node_path(&net, nodes, cfg.directed_evaluation)?;
        reports.push(evaluate_against_truth(&net, t, &set)?);
    }
    write_report(&reports, fs::File::create(cfg.out(EVALUATION))?)?;
    RunManifest::record(cfg, "evaluate", started, json!({"trips_evaluated": reports.len()}))?;
    Ok(reports)
}

/// All stages in order; evaluation runs when a truth file is configured.
pub fn cmd_pipeline(cfg: &RunConfig) -> Result<()> {
    fs::create_dir_all(&cfg.output_dir)?;
    cmd_preprocess(cfg)?;
    cmd_match(cfg)?;
    cmd_enrich(cfg)?;
    cmd_derive(cfg)?;
    if cfg.truth_path.is_some() {
        cmd_evaluate(cfg, None)?;
    }
    Ok(())
}
