//! GPX 1.0/1.1 track reading and writing.

use std::fmt::Write as _;

use chrono::{DateTime, SecondsFormat, Utc};

use super::{Trajectory, TripSegment, Waypoint};
use crate::error::{Error, Result};
use crate::geo::{GeoPoint, Timestamp};

/// Result of reading one GPX document.
#[derive(Debug, Clone)]
pub struct ParsedGpx {
    pub trajectory: Trajectory,
    /// Track points dropped because they had no (parsable) `<time>`.
    pub missing_time: usize,
}

/// Read every `trkpt` of every track in document order.
pub fn parse_gpx(bytes: &[u8], trip_id: &str) -> Result<ParsedGpx> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::MalformedGpx(e.to_string()))?;
    let doc = roxmltree::Document::parse(text).map_err(|e| Error::MalformedGpx(e.to_string()))?;
    let root = doc.root_element();
    if root.tag_name().name() != "gpx" {
        return Err(Error::MalformedGpx(format!("root element is <{}>", root.tag_name().name())));
    }
    if !root.descendants().any(|n| n.tag_name().name() == "trk") {
        return Err(Error::MalformedGpx("document has no <trk>".into()));
    }

    let mut points = Vec::new();
    let mut missing_time = 0;
    let trkpts = root.descendants().filter(|n| n.is_element() && n.tag_name().name() == "trkpt");
    for (source_index, node) in trkpts.enumerate() {
        let coord = |name: &str| -> Result<f64> {
            node.attribute(name)
                .and_then(|v| v.trim().parse::<f64>().ok())
                .ok_or_else(|| Error::MalformedGpx(format!("trkpt #{source_index} has no valid {name}")))
        };
        let point = GeoPoint::new(coord("lat")?, coord("lon")?)
            .map_err(|e| Error::MalformedGpx(format!("trkpt #{source_index}: {e}")))?;
        let time = node
            .children()
            .find(|c| c.tag_name().name() == "time")
            .and_then(|c| c.text())
            .and_then(|t| parse_time(t.trim()));
        match time {
            Some(time) => points.push(Waypoint { point, time, source_index }),
            None => missing_time += 1,
        }
    }
    if points.is_empty() {
        return Err(Error::EmptyTrack);
    }
    Ok(ParsedGpx { trajectory: Trajectory { trip_id: trip_id.to_string(), points }, missing_time })
}

pub fn parse_time(text: &str) -> Option<Timestamp> {
    let dt = DateTime::parse_from_rfc3339(text).ok()?.with_timezone(&Utc);
    let secs = dt.timestamp() as f64 + f64::from(dt.timestamp_subsec_nanos()) * 1e-9;
    Timestamp::from_epoch_seconds(secs).ok()
}

/// ISO-8601 UTC rendering used by the GPX writer and the cleaned table.
pub fn format_time(t: Timestamp) -> String {
    let secs = t.epoch_seconds();
    let whole = secs.floor();
    let nanos = ((secs - whole) * 1e9).round().min(999_999_999.0) as u32;
    match DateTime::<Utc>::from_timestamp(whole as i64, nanos) {
        Some(dt) => dt.to_rfc3339_opts(SecondsFormat::AutoSi, true),
        None => format!("{secs}"),
    }
}

/// Serialize a cleaned segment as a single-track GPX 1.1 document.
pub fn write_gpx(segment: &TripSegment) -> String {
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    out.push_str("<gpx version=\"1.1\" creator=\"cycletrail\" xmlns=\"http://www.topografix.com/GPX/1/1\">\n");
    let _ = writeln!(out, "  <trk>\n    <name>{}_{}</name>\n    <trkseg>", xml_escape(&segment.trip_id), segment.segment_index);
    for wp in &segment.points {
        let _ = writeln!(
            out,
            "      <trkpt lat=\"{}\" lon=\"{}\"><time>{}</time></trkpt>",
            wp.point.lat(),
            wp.point.lon(),
            format_time(wp.time)
        );
    }
    out.push_str("    </trkseg>\n  </trk>\n</gpx>\n");
    out
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
