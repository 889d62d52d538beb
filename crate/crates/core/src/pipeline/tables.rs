//! Row layouts of the output tables and their CSV reading and writing.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::enrich::{EnrichedPoint, TravelDirection};
use crate::error::{Error, Result};
use crate::geo::GeoPoint;
use crate::matcher::MatchedTrip;
use crate::metrics::{HistogramBin, VariablesRecord};
use crate::network::{CyclewayKind, Cycleway, MaxSpeed, SpeedUnit, WayTags};
use crate::preprocess::{format_time, parse_time, TripSegment, Waypoint};

pub const CLEANED_TRIP: &str = "cleaned_trip.csv";
pub const MATCHED_TRIP: &str = "matched_trip.csv";
pub const TRIP_ATTRIBUTES: &str = "trip_atrributes.csv";
pub const TRIP_ATTRIBUTES_ALIAS: &str = "trip_attributes.csv";
pub const VARIABLES: &str = "variables.csv";
pub const SPEED_HISTOGRAM: &str = "speed_histogram.csv";
pub const EVALUATION: &str = "evaluation.csv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CleanedRow {
    pub trip_id: String,
    pub segment_index: usize,
    pub point_seq: usize,
    pub lat: f64,
    pub lon: f64,
    pub time: String,
}

impl CleanedRow {
    pub const COLUMNS: usize = 6;

    pub fn rows(seg: &TripSegment) -> impl Iterator<Item = CleanedRow> + '_ {
        seg.points.iter().enumerate().map(|(i, w)| CleanedRow {
            trip_id: seg.trip_id.clone(),
            segment_index: seg.segment_index,
            point_seq: i,
            lat: w.point.lat(),
            lon: w.point.lon(),
            time: format_time(w.time),
        })
    }

    /// Regroup rows into segments, in table order.
    pub fn segments(rows: Vec<CleanedRow>) -> Result<Vec<TripSegment>> {
        let mut out: Vec<TripSegment> = Vec::new();
        for r in rows {
            let point = GeoPoint::new(r.lat, r.lon)?;
            let time = parse_time(&r.time).ok_or_else(|| Error::ParseError(format!("bad time '{}'", r.time)))?;
            let same = out.last().is_some_and(|s| s.trip_id == r.trip_id && s.segment_index == r.segment_index);
            if !same {
                out.push(TripSegment { trip_id: r.trip_id.clone(), segment_index: r.segment_index, points: Vec::new() });
            }
            let seg = out.last_mut().expect("pushed");
            seg.points.push(Waypoint { point, time, source_index: r.point_seq });
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchedRow {
    pub trip_id: String,
    pub segment_index: usize,
    pub point_seq: usize,
    pub lat: f64,
    pub lon: f64,
    pub way_id: Option<i64>,
    pub offset_m: f64,
    pub leg_distance_m: f64,
    pub leg_duration_s: f64,
}

impl MatchedRow {
    pub const COLUMNS: usize = 9;

    /// One row per retained point; leg columns describe the arriving leg.
    pub fn rows(trip: &MatchedTrip) -> impl Iterator<Item = MatchedRow> + '_ {
        trip.points.iter().enumerate().map(|(i, p)| {
            let leg = i.checked_sub(1).map(|j| &trip.legs[j]);
            MatchedRow {
                trip_id: trip.trip_id.clone(),
                segment_index: trip.segment_index,
                point_seq: p.point_seq,
                lat: p.snapped.lat(),
                lon: p.snapped.lon(),
                way_id: p.way_id,
                offset_m: p.offset_m,
                leg_distance_m: leg.map_or(0.0, |l| l.distance_m),
                leg_duration_s: leg.map_or(0.0, |l| l.duration_s),
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeRow {
    pub trip_id: String,
    pub segment_index: usize,
    pub point_seq: usize,
    pub lat: f64,
    pub lon: f64,
    pub way_id: Option<i64>,
    pub offset_m: f64,
    pub leg_distance_m: f64,
    pub leg_duration_s: f64,
    pub maxspeed_value: Option<f64>,
    pub maxspeed_unit: Option<String>,
    pub highway: Option<String>,
    pub name: Option<String>,
    #[serde(rename = "ref")]
    pub reference: Option<String>,
    pub lanes: Option<u32>,
    pub traffic_calming: Option<String>,
    pub cycleway_left: Option<String>,
    pub cycleway_right: Option<String>,
    pub cycleway_both: Option<String>,
    pub direction: String,
    pub effective_cycleway: String,
    pub signals_count: u32,
    pub stop_flag: bool,
    pub participant_id: String,
    /// Node ids of the leg, `;`-separated.
    pub node_sequence: String,
}

impl AttributeRow {
    pub const COLUMNS: usize = 25;

    pub fn from_point(p: &EnrichedPoint) -> AttributeRow {
        let cw = |c: &Option<Cycleway>| c.as_ref().map(|c| c.as_str().to_string());
        AttributeRow {
            trip_id: p.trip_id.clone(),
            segment_index: p.segment_index,
            point_seq: p.point_seq,
            lat: p.snapped.lat(),
            lon: p.snapped.lon(),
            way_id: p.way_id,
            offset_m: p.offset_m,
            leg_distance_m: p.leg_distance_m,
            leg_duration_s: p.leg_duration_s,
            maxspeed_value: p.tags.maxspeed.map(|m| m.value),
            maxspeed_unit: p.tags.maxspeed.map(|m| m.unit.as_str().to_string()),
            highway: p.tags.highway.clone(),
            name: p.tags.name.clone(),
            reference: p.tags.reference.clone(),
            lanes: p.tags.lanes,
            traffic_calming: p.tags.traffic_calming.clone(),
            cycleway_left: cw(&p.tags.cycleway_left),
            cycleway_right: cw(&p.tags.cycleway_right),
            cycleway_both: cw(&p.tags.cycleway_both),
            direction: p.direction.as_str().to_string(),
            effective_cycleway: p.effective_cycleway.as_str().to_string(),
            signals_count: p.signals_count,
            stop_flag: p.stopped,
            participant_id: p.participant_id.clone(),
            node_sequence: p.node_sequence.iter().map(i64::to_string).collect::<Vec<_>>().join(";"),
        }
    }

    pub fn to_point(&self) -> Result<EnrichedPoint> {
        let bad = |what: &str, v: &str| Error::ParseError(format!("{what} '{v}' in {}", TRIP_ATTRIBUTES));
        let unit = match self.maxspeed_unit.as_deref() {
            None => None,
            Some("mph") => Some(SpeedUnit::Mph),
            Some("km/h") => Some(SpeedUnit::Kmh),
            Some(u) => return Err(bad("maxspeed unit", u)),
        };
        let maxspeed = match (self.maxspeed_value, unit) {
            (Some(value), Some(unit)) => Some(MaxSpeed { value, unit }),
            _ => None,
        };
        let cw = |c: &Option<String>| c.as_ref().map(|v| v.parse::<Cycleway>().expect("infallible"));
        let node_sequence = if self.node_sequence.is_empty() {
            Vec::new()
        } else {
            self.node_sequence
                .split(';')
                .map(|s| s.parse::<i64>().map_err(|_| bad("node id", s)))
                .collect::<Result<_>>()?
        };
        Ok(EnrichedPoint {
            trip_id: self.trip_id.clone(),
            segment_index: self.segment_index,
            point_seq: self.point_seq,
            snapped: GeoPoint::new(self.lat, self.lon)?,
            way_id: self.way_id,
            offset_m: self.offset_m,
            leg_distance_m: self.leg_distance_m,
            leg_duration_s: self.leg_duration_s,
            tags: WayTags {
                maxspeed,
                highway: self.highway.clone(),
                name: self.name.clone(),
                reference: self.reference.clone(),
                lanes: self.lanes,
                traffic_calming: self.traffic_calming.clone(),
                cycleway_left: cw(&self.cycleway_left),
                cycleway_right: cw(&self.cycleway_right),
                cycleway_both: cw(&self.cycleway_both),
            },
            direction: TravelDirection::parse(&self.direction).ok_or_else(|| bad("direction", &self.direction))?,
            effective_cycleway: CyclewayKind::parse(&self.effective_cycleway)
                .ok_or_else(|| bad("cycleway", &self.effective_cycleway))?,
            signals_count: self.signals_count,
            stopped: self.stop_flag,
            participant_id: self.participant_id.clone(),
            node_sequence,
        })
    }
}

/// A row type with a fixed column layout.
pub trait Table {
    const HEADER: &'static [&'static str];
}

impl<T: Table> Table for &T {
    const HEADER: &'static [&'static str] = T::HEADER;
}

impl Table for CleanedRow {
    const HEADER: &'static [&'static str] = &["trip_id", "segment_index", "point_seq", "lat", "lon", "time"];
}

impl Table for MatchedRow {
    const HEADER: &'static [&'static str] = &[
        "trip_id", "segment_index", "point_seq", "lat", "lon", "way_id", "offset_m", "leg_distance_m", "leg_duration_s",
    ];
}

impl Table for AttributeRow {
    const HEADER: &'static [&'static str] = &[
        "trip_id",
        "segment_index",
        "point_seq",
        "lat",
        "lon",
        "way_id",
        "offset_m",
        "leg_distance_m",
        "leg_duration_s",
        "maxspeed_value",
        "maxspeed_unit",
        "highway",
        "name",
        "ref",
        "lanes",
        "traffic_calming",
        "cycleway_left",
        "cycleway_right",
        "cycleway_both",
        "direction",
        "effective_cycleway",
        "signals_count",
        "stop_flag",
        "participant_id",
        "node_sequence",
    ];
}

impl Table for VariablesRecord {
    const HEADER: &'static [&'static str] = &[
        "participant_id",
        "total_distance_m",
        "total_time_s",
        "avg_speed_ms",
        "avg_speed_kmh",
        "avg_moving_speed_kmh",
        "prop_time_20mph",
        "prop_time_30mph",
        "prop_shared_lane",
        "prop_track",
        "prop_separate",
        "prop_lane",
        "prop_share_busway",
        "signals_total",
        "signal_density_per_km",
    ];
}

impl Table for HistogramBin {
    const HEADER: &'static [&'static str] = &["metric", "bin_low_kmh", "bin_high_kmh", "participants"];
}

/// Write a table; the header is written even when there are no rows.
pub fn write_csv<T: Table + Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(BufWriter::new(File::create(path)?));
    w.write_record(T::HEADER)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    if !path.exists() {
        return Err(Error::MissingStageOutput(path.to_path_buf()));
    }
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut f = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n")?;
    f.flush()?;
    Ok(())
}

/// Header row of a table, as written.
pub fn header_of(path: &Path) -> Result<Vec<String>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.headers()?.iter().map(str::to_string).collect())
}
