//! Raw trace cleaning: timestamp repair, filtering, 1 Hz resampling and
//! gap segmentation.

mod boundary;
mod gpx;

use serde::{Deserialize, Serialize};

pub use boundary::Boundary;
pub use gpx::{format_time, parse_gpx, parse_time, write_gpx, ParsedGpx};

use crate::error::{Error, Result};
use crate::geo::{haversine_distance, GeoPoint, Timestamp};

/// Slack on speed comparisons so that a pair at exactly the limit is kept.
const SPEED_EPS_KMH: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    pub point: GeoPoint,
    pub time: Timestamp,
    /// Ordinal of the source `trkpt` in the original file.
    pub source_index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub trip_id: String,
    pub points: Vec<Waypoint>,
}

impl Trajectory {
    pub fn new(trip_id: impl Into<String>, points: Vec<Waypoint>) -> Self {
        Trajectory { trip_id: trip_id.into(), points }
    }

    fn with_points(&self, points: Vec<Waypoint>) -> Trajectory {
        Trajectory { trip_id: self.trip_id.clone(), points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// A gap-free run of a resampled trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripSegment {
    pub trip_id: String,
    pub segment_index: usize,
    pub points: Vec<Waypoint>,
}

impl TripSegment {
    /// `"{trip_id}_{segment_index}"`, the stem used for per-segment files.
    pub fn key(&self) -> String {
        format!("{}_{}", self.trip_id, self.segment_index)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StationaryTrim {
    /// Consecutive speeds below this (m/s) count as stationary.
    pub speed_ms: f64,
}

impl Default for StationaryTrim {
    fn default() -> Self {
        StationaryTrim { speed_ms: 0.3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PreprocessConfig {
    /// Study area; `None` disables the boundary filter.
    pub boundary: Option<Boundary>,
    pub max_speed_kmh: f64,
    pub gap_split_seconds: f64,
    pub resample_hz: u32,
    /// Segments shorter than this are discarded after splitting.
    pub min_points: usize,
    pub stationary_trim: StationaryTrim,
    /// Optional raw file-size prefilter (bytes), applied before parsing.
    pub min_file_bytes: Option<u64>,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            boundary: None,
            max_speed_kmh: 50.0,
            gap_split_seconds: 60.0,
            resample_hz: 1,
            min_points: 120,
            stationary_trim: StationaryTrim::default(),
            min_file_bytes: None,
        }
    }
}

impl PreprocessConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("max_speed_kmh", self.max_speed_kmh),
            ("gap_split_seconds", self.gap_split_seconds),
            ("stationary_trim.speed_ms", self.stationary_trim.speed_ms),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidConfig(format!("{name} must be strictly positive, got {v}")));
            }
        }
        if self.resample_hz == 0 {
            return Err(Error::InvalidConfig("resample_hz must be strictly positive".into()));
        }
        if self.min_points == 0 {
            return Err(Error::InvalidConfig("min_points must be strictly positive".into()));
        }
        Ok(())
    }
}

fn speed_kmh(a: &Waypoint, b: &Waypoint) -> f64 {
    haversine_distance(&a.point, &b.point) / b.time.seconds_since(a.time) * 3.6
}

/// Keep a point only if its time strictly exceeds the last kept point's.
pub fn fix_timestamps(t: &Trajectory) -> Trajectory {
    let mut kept: Vec<Waypoint> = Vec::with_capacity(t.points.len());
    for wp in &t.points {
        if kept.last().is_none_or(|last| wp.time > last.time) {
            kept.push(*wp);
        }
    }
    t.with_points(kept)
}

pub fn filter_bounds(t: &Trajectory, boundary: &Boundary) -> Trajectory {
    t.with_points(t.points.iter().filter(|wp| boundary.contains(&wp.point)).copied().collect())
}

/// Greedy forward pass: a point implying a speed above the limit relative
/// to the last kept point is dropped.
pub fn filter_speed(t: &Trajectory, max_speed_kmh: f64) -> Trajectory {
    let mut kept: Vec<Waypoint> = Vec::with_capacity(t.points.len());
    for wp in &t.points {
        match kept.last() {
            Some(last) if speed_kmh(last, wp) > max_speed_kmh + SPEED_EPS_KMH => {}
            _ => kept.push(*wp),
        }
    }
    t.with_points(kept)
}

/// Drop the leading run of points whose consecutive speeds are all below
/// the stationary threshold. An entirely stationary trace keeps its last
/// point only.
pub fn trim_stationary_start(t: &Trajectory, trim: &StationaryTrim) -> Trajectory {
    let pts = &t.points;
    if pts.len() < 2 {
        return t.clone();
    }
    let first_moving = pts
        .windows(2)
        .position(|w| speed_kmh(&w[0], &w[1]) / 3.6 >= trim.speed_ms)
        .unwrap_or(pts.len() - 1);
    t.with_points(pts[first_moving..].to_vec())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResampleOptions {
    pub hz: u32,
    /// Intervals longer than this are left unfilled.
    pub max_fill_gap_s: f64,
    /// When set, a nearest-point pick that would exceed this speed against
    /// its grid neighbour is replaced by the interpolated position.
    pub speed_ceiling_kmh: Option<f64>,
}

impl Default for ResampleOptions {
    fn default() -> Self {
        ResampleOptions { hz: 1, max_fill_gap_s: 60.0, speed_ceiling_kmh: None }
    }
}

struct GridSample {
    time: Timestamp,
    chosen: GeoPoint,
    interpolated: GeoPoint,
    nearest_pick: bool,
    source_index: usize,
}

/// Resample onto a fixed grid of `1/hz` seconds starting at the first grid
/// instant not before the first point. Sub-interval samples take the nearest
/// original point; longer intervals (up to `max_fill_gap_s`) are linearly
/// interpolated; longer gaps are left empty.
pub fn resample(t: &Trajectory, opts: &ResampleOptions) -> Trajectory {
    let pts = &t.points;
    let (Some(first), Some(last)) = (pts.first(), pts.last()) else {
        return t.with_points(Vec::new());
    };
    let hz = f64::from(opts.hz.max(1));
    let step = 1.0 / hz;
    let k_start = (first.time.epoch_seconds() * hz).ceil() as i64;
    let k_end = (last.time.epoch_seconds() * hz).floor() as i64;

    let mut samples: Vec<GridSample> = Vec::new();
    let mut j = 0;
    for k in k_start..=k_end {
        let g = k as f64 / hz;
        while j + 1 < pts.len() && pts[j + 1].time.epoch_seconds() <= g {
            j += 1;
        }
        let a = &pts[j];
        let time = Timestamp::from_epoch_seconds(g).expect("finite grid time");
        if a.time.epoch_seconds() == g || j + 1 == pts.len() {
            samples.push(GridSample { time, chosen: a.point, interpolated: a.point, nearest_pick: false, source_index: a.source_index });
            continue;
        }
        let b = &pts[j + 1];
        let (ta, tb) = (a.time.epoch_seconds(), b.time.epoch_seconds());
        let gap = tb - ta;
        if gap > opts.max_fill_gap_s {
            continue;
        }
        let interpolated = a.point.lerp(&b.point, (g - ta) / gap);
        if gap < step {
            let nearest = if g - ta <= tb - g { a } else { b };
            samples.push(GridSample { time, chosen: nearest.point, interpolated, nearest_pick: true, source_index: nearest.source_index });
        } else {
            samples.push(GridSample { time, chosen: interpolated, interpolated, nearest_pick: false, source_index: a.source_index });
        }
    }

    if let Some(ceiling) = opts.speed_ceiling_kmh {
        loop {
            let mut changed = false;
            for i in 1..samples.len() {
                let dt = samples[i].time.seconds_since(samples[i - 1].time);
                if dt > step * 1.5 || !(samples[i - 1].nearest_pick || samples[i].nearest_pick) {
                    continue;
                }
                let v = haversine_distance(&samples[i - 1].chosen, &samples[i].chosen) / dt * 3.6;
                if v > ceiling + SPEED_EPS_KMH {
                    for s in [i - 1, i] {
                        samples[s].chosen = samples[s].interpolated;
                        samples[s].nearest_pick = false;
                    }
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
    }

    t.with_points(
        samples
            .into_iter()
            .map(|s| Waypoint { point: s.chosen, time: s.time, source_index: s.source_index })
            .collect(),
    )
}

/// Start a new segment at every gap strictly longer than `gap_split_seconds`
/// and drop segments shorter than `min_points`. Indices are assigned to the
/// surviving segments in temporal order.
pub fn split_on_gaps(t: &Trajectory, gap_split_seconds: f64, min_points: usize) -> Vec<TripSegment> {
    split_raw(t, gap_split_seconds)
        .into_iter()
        .filter(|run| run.len() >= min_points)
        .enumerate()
        .map(|(segment_index, points)| TripSegment { trip_id: t.trip_id.clone(), segment_index, points })
        .collect()
}

fn split_raw(t: &Trajectory, gap_split_seconds: f64) -> Vec<Vec<Waypoint>> {
    let mut runs: Vec<Vec<Waypoint>> = Vec::new();
    let mut current: Vec<Waypoint> = Vec::new();
    for wp in &t.points {
        if let Some(prev) = current.last() {
            if wp.time.seconds_since(prev.time) > gap_split_seconds {
                runs.push(std::mem::take(&mut current));
            }
        }
        current.push(*wp);
    }
    if !current.is_empty() {
        runs.push(current);
    }
    runs
}

/// Point accounting for one stage: `points_in + added == points_out + dropped`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageCount {
    pub stage: String,
    pub points_in: usize,
    pub points_out: usize,
    pub dropped: usize,
    pub added: usize,
}

impl StageCount {
    fn new(stage: &str, points_in: usize, points_out: usize) -> Self {
        let (dropped, added) =
            if points_out <= points_in { (points_in - points_out, 0) } else { (0, points_out - points_in) };
        StageCount { stage: stage.to_string(), points_in, points_out, dropped, added }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PreprocessReport {
    pub stages: Vec<StageCount>,
    /// Number of gaps that started a new segment.
    pub splits: usize,
    pub short_segments_discarded: usize,
    /// The whole trace was stationary and collapsed to a single point.
    pub fully_stationary: bool,
}

#[derive(Debug, Clone)]
pub struct PreprocessOutcome {
    pub segments: Vec<TripSegment>,
    pub report: PreprocessReport,
}

/// Run the full cleaning chain: timestamps, boundary, speed, stationary
/// start, resampling, gap splitting.
pub fn preprocess(t: &Trajectory, cfg: &PreprocessConfig) -> Result<PreprocessOutcome> {
    cfg.validate()?;
    let mut report = PreprocessReport::default();
    let mut record = |name: &str, before: usize, after: &Trajectory| {
        report.stages.push(StageCount::new(name, before, after.len()));
    };

    let fixed = fix_timestamps(t);
    record("fix_timestamps", t.len(), &fixed);
    let bounded = match &cfg.boundary {
        Some(b) => filter_bounds(&fixed, b),
        None => fixed.clone(),
    };
    record("filter_bounds", fixed.len(), &bounded);
    let capped = filter_speed(&bounded, cfg.max_speed_kmh);
    record("filter_speed", bounded.len(), &capped);
    let trimmed = trim_stationary_start(&capped, &cfg.stationary_trim);
    record("trim_stationary_start", capped.len(), &trimmed);
    let fully_stationary = capped.len() > 1 && trimmed.len() == 1;
    let resampled = resample(
        &trimmed,
        &ResampleOptions {
            hz: cfg.resample_hz,
            max_fill_gap_s: cfg.gap_split_seconds,
            speed_ceiling_kmh: Some(cfg.max_speed_kmh),
        },
    );
    record("resample", trimmed.len(), &resampled);

    let runs = split_raw(&resampled, cfg.gap_split_seconds);
    let splits = runs.len().saturating_sub(1);
    let segments = split_on_gaps(&resampled, cfg.gap_split_seconds, cfg.min_points);
    let kept: usize = segments.iter().map(|s| s.points.len()).sum();
    report.stages.push(StageCount::new("split_on_gaps", resampled.len(), kept));
    report.splits = splits;
    report.short_segments_discarded = runs.len() - segments.len();
    report.fully_stationary = fully_stationary;
    Ok(PreprocessOutcome { segments, report })
}
