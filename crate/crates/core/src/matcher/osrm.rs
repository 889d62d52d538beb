//! Client and wire format for OSRM-compatible `/match` services.

use std::time::Duration;

use log::debug;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{MatchedLeg, MatchedPoint, MatchedTrip};
use crate::error::{Error, Result};
use crate::geo::{haversine_distance, GeoPoint};
use crate::preprocess::{TripSegment, Waypoint};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RemoteConfig {
    pub base_url: String,
    pub profile: String,
    pub timeout_s: f64,
    /// Coordinates per request; longer segments are sent in overlapping chunks.
    pub max_coordinates: usize,
    /// Upper bound on concurrent requests.
    pub max_in_flight: usize,
}

impl Default for RemoteConfig {
    fn default() -> Self {
        RemoteConfig {
            base_url: "http://localhost:5000".into(),
            profile: "bike".into(),
            timeout_s: 30.0,
            max_coordinates: 100,
            max_in_flight: 4,
        }
    }
}

/// `{base}/match/v1/{profile}/{lon,lat;...}?timestamps=...&annotations=true`
pub fn match_url(cfg: &RemoteConfig, points: &[Waypoint]) -> String {
    let coords: Vec<String> = points.iter().map(|w| format!("{},{}", w.point.lon(), w.point.lat())).collect();
    let stamps: Vec<String> = points.iter().map(|w| format!("{}", w.time.epoch_seconds().floor() as i64)).collect();
    format!(
        "{}/match/v1/{}/{}?timestamps={}&annotations=true",
        cfg.base_url.trim_end_matches('/'),
        cfg.profile,
        coords.join(";"),
        stamps.join(";")
    )
}

#[derive(Debug, Deserialize)]
struct Response {
    code: String,
    #[serde(default)]
    message: Option<String>,
    #[serde(default)]
    matchings: Vec<Matching>,
    #[serde(default)]
    tracepoints: Vec<Option<Tracepoint>>,
}

#[derive(Debug, Deserialize)]
struct Matching {
    #[serde(default)]
    legs: Vec<Leg>,
}

#[derive(Debug, Deserialize)]
struct Leg {
    distance: f64,
    #[serde(default)]
    annotation: Option<Annotation>,
}

#[derive(Debug, Deserialize)]
struct Annotation {
    #[serde(default)]
    nodes: Vec<i64>,
}

#[derive(Debug, Clone, Deserialize)]
struct Tracepoint {
    location: [f64; 2],
    matchings_index: usize,
    waypoint_index: usize,
    #[serde(default)]
    distance: Option<f64>,
    #[serde(default)]
    way_id: Option<i64>,
    #[serde(default)]
    offset_m: Option<f64>,
}

/// A parsed response for a contiguous slice of segment points.
struct ChunkMatch {
    start: usize,
    tracepoints: Vec<Option<Tracepoint>>,
    matchings: Vec<Matching>,
}

impl ChunkMatch {
    fn tracepoint(&self, seq: usize) -> Option<&Tracepoint> {
        seq.checked_sub(self.start).and_then(|i| self.tracepoints.get(i)).and_then(Option::as_ref)
    }

    /// Leg joining two segment points, if both are consecutive waypoints of
    /// the same matching in this chunk.
    fn leg_between(&self, a: usize, b: usize) -> Option<&Leg> {
        let (ta, tb) = (self.tracepoint(a)?, self.tracepoint(b)?);
        if ta.matchings_index != tb.matchings_index || tb.waypoint_index != ta.waypoint_index + 1 {
            return None;
        }
        self.matchings.get(ta.matchings_index)?.legs.get(ta.waypoint_index)
    }
}

fn parse_chunk(body: &Value, start: usize, len: usize) -> Result<ChunkMatch> {
    let resp: Response = serde_json::from_value(body.clone()).map_err(|e| Error::ParseError(e.to_string()))?;
    match resp.code.as_str() {
        "Ok" => {}
        "NoMatch" => return Ok(ChunkMatch { start, tracepoints: vec![None; len], matchings: Vec::new() }),
        _ => {
            return Err(Error::RemoteRejected { code: resp.code, message: resp.message.unwrap_or_default() });
        }
    }
    if resp.tracepoints.len() != len {
        return Err(Error::ParseError(format!("expected {len} tracepoints, got {}", resp.tracepoints.len())));
    }
    for tp in resp.tracepoints.iter().flatten() {
        let legs = resp
            .matchings
            .get(tp.matchings_index)
            .ok_or_else(|| Error::ParseError(format!("matchings_index {} out of range", tp.matchings_index)))?
            .legs
            .len();
        if tp.waypoint_index > legs {
            return Err(Error::ParseError(format!("waypoint_index {} beyond {legs} legs", tp.waypoint_index)));
        }
    }
    Ok(ChunkMatch { start, tracepoints: resp.tracepoints, matchings: resp.matchings })
}

fn assemble(seg: &TripSegment, chunks: &[ChunkMatch]) -> Result<MatchedTrip> {
    let mut points = Vec::new();
    let mut discarded = Vec::new();
    for (seq, wp) in seg.points.iter().enumerate() {
        let Some(tp) = chunks.iter().find_map(|c| c.tracepoint(seq)) else {
            discarded.push(seq);
            continue;
        };
        let snapped = GeoPoint::new(tp.location[1], tp.location[0]).map_err(|e| Error::ParseError(e.to_string()))?;
        points.push(MatchedPoint {
            point_seq: seq,
            time: wp.time,
            observed: wp.point,
            snapped,
            arc: None,
            way_id: tp.way_id,
            offset_m: tp.offset_m.unwrap_or(0.0),
            emission_distance_m: tp.distance.unwrap_or_else(|| haversine_distance(&wp.point, &snapped)),
        });
    }
    let mut legs = Vec::new();
    for w in points.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let leg = chunks.iter().rev().find_map(|c| c.leg_between(a.point_seq, b.point_seq));
        let (distance_m, node_sequence) = match leg {
            Some(l) => (l.distance, l.annotation.as_ref().map(|x| x.nodes.clone()).unwrap_or_default()),
            // separate matchings: bridge with the straight line
            None => (haversine_distance(&a.snapped, &b.snapped), Vec::new()),
        };
        legs.push(MatchedLeg {
            from_seq: a.point_seq,
            to_seq: b.point_seq,
            node_sequence,
            distance_m,
            duration_s: b.time.seconds_since(a.time),
            intersections: 0,
        });
    }
    Ok(MatchedTrip {
        trip_id: seg.trip_id.clone(),
        segment_index: seg.segment_index,
        points,
        legs,
        discarded,
        log_probability: None,
    })
}

/// Interpret one service response covering the whole segment.
pub fn parse_match_response(seg: &TripSegment, body: &Value) -> Result<MatchedTrip> {
    let chunk = parse_chunk(body, 0, seg.points.len())?;
    assemble(seg, &[chunk])
}

/// Chunk boundaries `[start, end)` overlapping by one point.
fn chunk_ranges(n: usize, max: usize) -> Vec<(usize, usize)> {
    let max = max.max(2);
    let mut out = Vec::new();
    let mut start = 0;
    loop {
        let end = (start + max).min(n);
        out.push((start, end));
        if end >= n {
            break;
        }
        start = end - 1;
    }
    out
}

/// Result of a remote match plus the raw responses, one per request.
#[derive(Debug, Clone)]
pub struct RemoteMatch {
    pub trip: MatchedTrip,
    pub responses: Vec<Value>,
}

impl RemoteMatch {
    /// Single JSON document to persist for the segment.
    pub fn response_document(&self) -> Value {
        match self.responses.as_slice() {
            [one] => one.clone(),
            many => Value::Array(many.to_vec()),
        }
    }
}

pub struct MatchClient {
    cfg: RemoteConfig,
    http: reqwest::blocking::Client,
}

impl MatchClient {
    pub fn new(cfg: RemoteConfig) -> Result<Self> {
        let http = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs_f64(cfg.timeout_s.max(0.001)))
            .build()
            .map_err(|e| Error::RemoteUnavailable(e.to_string()))?;
        Ok(MatchClient { cfg, http })
    }

    fn request(&self, points: &[Waypoint]) -> Result<Value> {
        let url = match_url(&self.cfg, points);
        debug!("GET {url}");
        let resp = self.http.get(&url).send().map_err(|e| Error::RemoteUnavailable(e.to_string()))?;
        let status = resp.status();
        let bytes = resp.bytes().map_err(|e| Error::RemoteUnavailable(e.to_string()))?;
        match serde_json::from_slice::<Value>(&bytes) {
            Ok(v) if v.get("code").is_some() => Ok(v),
            Ok(_) | Err(_) if !status.is_success() => Err(Error::RemoteRejected {
                code: status.to_string(),
                message: String::from_utf8_lossy(&bytes).into_owned(),
            }),
            Ok(_) => Err(Error::ParseError("response has no 'code'".into())),
            Err(e) => Err(Error::ParseError(e.to_string())),
        }
    }

    /// Match a segment through the remote service.
    pub fn remote_match(&self, seg: &TripSegment) -> Result<RemoteMatch> {
        let mut chunks = Vec::new();
        let mut responses = Vec::new();
        if seg.points.len() >= 2 {
            for (start, end) in chunk_ranges(seg.points.len(), self.cfg.max_coordinates) {
                let body = self.request(&seg.points[start..end])?;
                chunks.push(parse_chunk(&body, start, end - start)?);
                responses.push(body);
            }
        }
        Ok(RemoteMatch { trip: assemble(seg, &chunks)?, responses })
    }
}

/// Render a matched trip in the service's response shape, with `way_id`
/// and `offset_m` added to each tracepoint.
pub fn to_osrm_response(trip: &MatchedTrip, seg: &TripSegment) -> Value {
    if trip.points.is_empty() {
        return json!({"code": "NoMatch", "message": "Could not match the trace.", "matchings": [], "tracepoints": vec![Value::Null; seg.points.len()]});
    }
    let mut tracepoints = vec![Value::Null; seg.points.len()];
    for (k, p) in trip.points.iter().enumerate() {
        tracepoints[p.point_seq] = json!({
            "location": [p.snapped.lon(), p.snapped.lat()],
            "matchings_index": 0,
            "waypoint_index": k,
            "alternatives_count": 0,
            "distance": p.emission_distance_m,
            "name": "",
            "way_id": p.way_id,
            "offset_m": p.offset_m,
        });
    }
    let legs: Vec<Value> = trip
        .legs
        .iter()
        .map(|l| json!({"distance": l.distance_m, "duration": l.duration_s, "annotation": {"nodes": l.node_sequence}}))
        .collect();
    json!({
        "code": "Ok",
        "matchings": [{
            "confidence": 1.0,
            "distance": trip.total_distance_m(),
            "duration": trip.total_duration_s(),
            "legs": legs,
        }],
        "tracepoints": tracepoints,
    })
}
