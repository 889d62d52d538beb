//! Stop identification and per-participant derived variables.

use serde::{Deserialize, Serialize};

use crate::enrich::EnrichedPoint;
use crate::error::{Error, Result};
use crate::geo::fsum;
use crate::network::{CyclewayKind, MaxSpeed, SpeedUnit};

const KMH_PER_MPH: f64 = 1.609344;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StopConfig {
    /// m/s
    pub speed_threshold: f64,
    /// seconds
    pub duration_threshold: f64,
}

impl Default for StopConfig {
    fn default() -> Self {
        StopConfig { speed_threshold: 0.3, duration_threshold: 20.0 }
    }
}

impl StopConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.speed_threshold > 0.0 && self.duration_threshold > 0.0) {
            return Err(Error::InvalidConfig("stop thresholds must be strictly positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopStatus {
    Moving,
    Stopped,
}

fn leg_speed(distance_m: f64, duration_s: f64) -> f64 {
    if duration_s > 0.0 {
        distance_m / duration_s
    } else {
        0.0
    }
}

/// Classify the points of one trip. A point's speed is that of its arriving
/// leg (the first point uses the leg leaving it). Maximal runs below the
/// speed threshold whose arriving legs last longer than the duration
/// threshold in total are stopped.
pub fn identify_stops(points: &[EnrichedPoint], cfg: &StopConfig) -> Vec<StopStatus> {
    let speeds: Vec<f64> = (0..points.len())
        .map(|i| {
            let p = if i == 0 { points.get(1).unwrap_or(&points[0]) } else { &points[i] };
            leg_speed(p.leg_distance_m, p.leg_duration_s)
        })
        .collect();
    let mut out = vec![StopStatus::Moving; points.len()];
    let mut i = 0;
    while i < points.len() {
        if speeds[i] >= cfg.speed_threshold {
            i += 1;
            continue;
        }
        let start = i;
        while i < points.len() && speeds[i] < cfg.speed_threshold {
            i += 1;
        }
        let duration = fsum(points[start..i].iter().map(|p| p.leg_duration_s));
        if duration > cfg.duration_threshold {
            out[start..i].fill(StopStatus::Stopped);
        }
    }
    out
}

/// Flag stopped points in place. Runs never cross trip boundaries.
pub fn flag_stops(points: &mut [EnrichedPoint], cfg: &StopConfig) {
    let mut start = 0;
    while start < points.len() {
        let key = (points[start].trip_id.clone(), points[start].segment_index);
        let end = start + points[start..].iter().take_while(|p| (&p.trip_id, p.segment_index) == (&key.0, key.1)).count();
        let status = identify_stops(&points[start..end], cfg);
        for (p, s) in points[start..end].iter_mut().zip(status) {
            p.stopped = s == StopStatus::Stopped;
        }
        start = end;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpeedLimitClass {
    Mph20,
    Mph30,
    Other,
}

/// Map a posted limit to the 20 and 30 mph classes. Metric limits are
/// converted and accepted when the rounded mph value is within 1 mph.
pub fn maxspeed_normalize(raw: Option<&MaxSpeed>) -> SpeedLimitClass {
    let Some(m) = raw else { return SpeedLimitClass::Other };
    let (mph, tol) = match m.unit {
        SpeedUnit::Mph => (m.value, 0.0),
        SpeedUnit::Kmh => ((m.value / KMH_PER_MPH).round(), 1.0),
    };
    if (mph - 20.0).abs() <= tol {
        SpeedLimitClass::Mph20
    } else if (mph - 30.0).abs() <= tol {
        SpeedLimitClass::Mph30
    } else {
        SpeedLimitClass::Other
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariablesRecord {
    pub participant_id: String,
    pub total_distance_m: f64,
    pub total_time_s: f64,
    pub avg_speed_ms: f64,
    pub avg_speed_kmh: f64,
    pub avg_moving_speed_kmh: f64,
    pub prop_time_20mph: f64,
    pub prop_time_30mph: f64,
    pub prop_shared_lane: f64,
    pub prop_track: f64,
    pub prop_separate: f64,
    pub prop_lane: f64,
    pub prop_share_busway: f64,
    pub signals_total: u64,
    pub signal_density_per_km: f64,
}

impl VariablesRecord {
    pub const COLUMNS: usize = 15;
}

/// Time split of a set of rows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeBudget {
    pub total_s: f64,
    pub stopped_s: f64,
    pub moving_s: f64,
}

pub fn time_budget(rows: &[&EnrichedPoint]) -> TimeBudget {
    let total_s = fsum(rows.iter().map(|p| p.leg_duration_s));
    let stopped_s = fsum(rows.iter().filter(|p| p.stopped).map(|p| p.leg_duration_s));
    TimeBudget { total_s, stopped_s, moving_s: total_s - stopped_s }
}

/// Aggregate stop-flagged rows of one participant. Rows are summed in
/// (trip_id, segment_index, point_seq) order whatever order they arrive in.
pub fn derive_variables(participant_id: &str, rows: &[EnrichedPoint]) -> Result<VariablesRecord> {
    let mut rows: Vec<&EnrichedPoint> = rows.iter().collect();
    rows.sort_by(|a, b| (&a.trip_id, a.segment_index, a.point_seq).cmp(&(&b.trip_id, b.segment_index, b.point_seq)));
    let budget = time_budget(&rows);
    if !(budget.total_s > 0.0) {
        return Err(Error::ZeroDuration);
    }
    let total_time = budget.total_s;
    let distance = fsum(rows.iter().map(|p| p.leg_distance_m));
    let time_where = |f: &dyn Fn(&EnrichedPoint) -> bool| -> f64 {
        fsum(rows.iter().filter(|p| f(p)).map(|p| p.leg_duration_s)) / total_time
    };
    let limit = |c: SpeedLimitClass| time_where(&|p| maxspeed_normalize(p.tags.maxspeed.as_ref()) == c);
    let cycle = |k: CyclewayKind| time_where(&|p| p.effective_cycleway == k);
    let signals_total: u64 = rows.iter().map(|p| u64::from(p.signals_count)).sum();
    let avg_speed_ms = distance / total_time;
    let avg_moving_speed_kmh = if budget.moving_s > 0.0 { distance / budget.moving_s * 3.6 } else { 0.0 };
    Ok(VariablesRecord {
        participant_id: participant_id.to_string(),
        total_distance_m: distance,
        total_time_s: total_time,
        avg_speed_ms,
        avg_speed_kmh: (distance / 1000.0) / (total_time / 3600.0),
        avg_moving_speed_kmh,
        prop_time_20mph: limit(SpeedLimitClass::Mph20),
        prop_time_30mph: limit(SpeedLimitClass::Mph30),
        prop_shared_lane: cycle(CyclewayKind::SharedLane),
        prop_track: cycle(CyclewayKind::Track),
        prop_separate: cycle(CyclewayKind::Separate),
        prop_lane: cycle(CyclewayKind::Lane),
        prop_share_busway: cycle(CyclewayKind::ShareBusway),
        signals_total,
        signal_density_per_km: if distance > 0.0 { signals_total as f64 / (distance / 1000.0) } else { 0.0 },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub metric: String,
    pub bin_low_kmh: f64,
    pub bin_high_kmh: f64,
    pub participants: usize,
}

/// Participant counts per speed bin, for average and moving speed.
pub fn speed_histogram(records: &[VariablesRecord], bin_width_kmh: f64) -> Vec<HistogramBin> {
    let mut out = Vec::new();
    let metrics: [(&str, fn(&VariablesRecord) -> f64); 2] = [
        ("avg_speed_kmh", |r| r.avg_speed_kmh),
        ("avg_moving_speed_kmh", |r| r.avg_moving_speed_kmh),
    ];
    for (name, get) in metrics {
        let bins: Vec<i64> = records.iter().map(|r| (get(r) / bin_width_kmh).floor() as i64).collect();
        let (Some(&lo), Some(&hi)) = (bins.iter().min(), bins.iter().max()) else { continue };
        for b in lo..=hi {
            out.push(HistogramBin {
                metric: name.to_string(),
                bin_low_kmh: b as f64 * bin_width_kmh,
                bin_high_kmh: (b + 1) as f64 * bin_width_kmh,
                participants: bins.iter().filter(|&&x| x == b).count(),
            });
        }
    }
    out
}
