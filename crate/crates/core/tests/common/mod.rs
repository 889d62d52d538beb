//! Independent reference implementations used by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use cycletrail::geo::{haversine_distance, GeoPoint, Timestamp};
use cycletrail::matcher::MatcherConfig;
use cycletrail::network::{Anchor, ArcId, Candidate, NetworkBuilder, RoadNetwork, Tags};
use cycletrail::preprocess::{TripSegment, Waypoint};
use rand::Rng;

pub const R: f64 = 6_371_008.8;

/// Great-circle distance by the atan2 form of the haversine formula.
pub fn gc_atan2(a: (f64, f64), b: (f64, f64)) -> f64 {
    let (p1, p2) = (a.0.to_radians(), b.0.to_radians());
    let dp = p2 - p1;
    let dl = (b.1 - a.1).to_radians();
    let h = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
    2.0 * R * h.sqrt().atan2((1.0 - h).sqrt())
}

pub fn tags(pairs: &[(&str, &str)]) -> Tags {
    pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
}

/// Point `east`/`north` metres from `origin` on a local tangent plane.
pub fn at(origin: (f64, f64), east: f64, north: f64) -> GeoPoint {
    let lat = origin.0 + north / R * 180.0 / std::f64::consts::PI;
    let lon = origin.1 + east / (R * origin.0.to_radians().cos()) * 180.0 / std::f64::consts::PI;
    GeoPoint::new(lat, lon).unwrap()
}

/// Straight east-west street of `n` nodes `spacing` metres apart, ids 1..=n,
/// as way 10.
pub fn street(n: usize, spacing: f64, way_tags: &[(&str, &str)], signals: &[i64]) -> RoadNetwork {
    let o = (51.5, -0.1);
    let mut b = NetworkBuilder::new();
    for i in 0..n {
        let t = if signals.contains(&(i as i64 + 1)) { tags(&[("highway", "traffic_signals")]) } else { Tags::new() };
        b.add_node(i as i64 + 1, at(o, i as f64 * spacing, 0.0), t);
    }
    let mut wt = tags(way_tags);
    wt.entry("highway".into()).or_insert_with(|| "residential".into());
    b.add_way(10, (1..=n as i64).collect(), wt);
    b.build().0
}

/// A 1 Hz segment from explicit points.
pub fn segment(trip: &str, points: &[GeoPoint]) -> TripSegment {
    TripSegment {
        trip_id: trip.into(),
        segment_index: 0,
        points: points
            .iter()
            .enumerate()
            .map(|(i, p)| Waypoint {
                point: *p,
                time: Timestamp::from_epoch_seconds(1_700_000_000.0 + i as f64).unwrap(),
                source_index: i,
            })
            .collect(),
    }
}

// ---- routing oracle -------------------------------------------------------

/// Shortest distance by enumerating every simple path, summing in path
/// order from the remainder of the source arc. `None` if unreachable or
/// longer than `limit`.
pub fn brute_route(net: &RoadNetwork, from: &Anchor, to: &Anchor, limit: f64) -> Option<f64> {
    let src = net.arc(from.arc);
    if to.arc == from.arc && to.offset_m >= from.offset_m {
        let d = to.offset_m - from.offset_m;
        return (d <= limit).then_some(d);
    }
    let target_vertex = net.arc(to.arc).from_vertex();
    let mut out: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for a in net.arcs() {
        out.entry(a.from_vertex()).or_default().push(a.id.0);
    }
    let mut best: Option<f64> = None;
    let mut visited = vec![src.to_vertex()];
    fn dfs(
        net: &RoadNetwork,
        out: &BTreeMap<usize, Vec<usize>>,
        v: usize,
        d: f64,
        target: usize,
        off: f64,
        visited: &mut Vec<usize>,
        best: &mut Option<f64>,
    ) {
        if v == target {
            let total = d + off;
            if best.is_none_or(|b| total < b) {
                *best = Some(total);
            }
        }
        for &a in out.get(&v).map(Vec::as_slice).unwrap_or(&[]) {
            let arc = net.arc(ArcId(a));
            let w = arc.to_vertex();
            if visited.contains(&w) {
                continue;
            }
            visited.push(w);
            dfs(net, out, w, d + arc.length_m, target, off, visited, best);
            visited.pop();
        }
    }
    dfs(net, &out, src.to_vertex(), src.length_m - from.offset_m, target_vertex, to.offset_m, &mut visited, &mut best);
    best.filter(|&d| d <= limit)
}

// ---- Viterbi oracle -------------------------------------------------------

pub fn emission(d: f64, sigma: f64) -> f64 {
    let z = d / sigma;
    -0.5 * z * z - (sigma * (2.0 * std::f64::consts::PI).sqrt()).ln()
}

pub fn transition(gc: f64, route: Option<f64>, beta: f64) -> f64 {
    match route {
        Some(r) => -(gc - r).abs() / beta - beta.ln(),
        None => f64::NEG_INFINITY,
    }
}

fn oracle_route(net: &RoadNetwork, a: &Candidate, b: &Candidate, gc: f64, cfg: &MatcherConfig) -> Option<f64> {
    let (from, to) = (Anchor::new(a.arc, a.offset_m), Anchor::new(b.arc, b.offset_m));
    if from.arc == to.arc && to.offset_m < from.offset_m && from.offset_m - to.offset_m <= cfg.backward_tolerance_m {
        return Some(0.0);
    }
    brute_route(net, &from, &to, gc + cfg.route_search_slack_m)
}

/// Best joint log-probability over every assignment of candidates, and the
/// assignment chosen by comparing state indices from the last point back.
pub fn enumerate_best(
    net: &RoadNetwork,
    obs: &[GeoPoint],
    lattice: &[Vec<Candidate>],
    cfg: &MatcherConfig,
) -> (f64, Vec<usize>) {
    let n = lattice.len();
    let mut trans: Vec<Vec<Vec<f64>>> = Vec::new();
    for t in 1..n {
        let gc = haversine_distance(&obs[t - 1], &obs[t]);
        trans.push(
            lattice[t - 1]
                .iter()
                .map(|a| lattice[t].iter().map(|b| transition(gc, oracle_route(net, a, b, gc, cfg), cfg.beta_m)).collect())
                .collect(),
        );
    }
    let mut best = f64::NEG_INFINITY;
    let mut best_path: Vec<usize> = Vec::new();
    let mut idx = vec![0usize; n];
    loop {
        let mut s = emission(lattice[0][idx[0]].distance_m, cfg.sigma_m);
        for t in 1..n {
            s = s + trans[t - 1][idx[t - 1]][idx[t]] + emission(lattice[t][idx[t]].distance_m, cfg.sigma_m);
        }
        let rev = |p: &[usize]| p.iter().rev().copied().collect::<Vec<_>>();
        if s > best || (s == best && !best_path.is_empty() && rev(&idx) < rev(&best_path)) {
            best = s;
            best_path = idx.clone();
        }
        let mut k = 0;
        loop {
            if k == n {
                return (best, best_path);
            }
            idx[k] += 1;
            if idx[k] < lattice[k].len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// Random connected two-way network of at most `max_edges` edges (so at most
/// twice as many arcs), laid out inside a 300 m square.
pub fn random_network<R2: Rng>(rng: &mut R2, max_edges: usize) -> RoadNetwork {
    let o = (51.5, -0.1);
    let n_nodes = rng.gen_range(3..=5);
    let mut b = NetworkBuilder::new();
    let pts: Vec<GeoPoint> = (0..n_nodes).map(|_| at(o, rng.gen_range(0.0..300.0), rng.gen_range(0.0..300.0))).collect();
    for (i, p) in pts.iter().enumerate() {
        b.add_node(i as i64 + 1, *p, Tags::new());
    }
    let mut edges: Vec<(i64, i64)> = (1..n_nodes).map(|i| (rng.gen_range(0..i) as i64 + 1, i as i64 + 1)).collect();
    while edges.len() < max_edges && rng.gen_bool(0.5) {
        let (a, c) = (rng.gen_range(1..=n_nodes as i64), rng.gen_range(1..=n_nodes as i64));
        if a != c && !edges.contains(&(a, c)) && !edges.contains(&(c, a)) {
            edges.push((a, c));
        }
    }
    for (k, (a, c)) in edges.iter().enumerate() {
        let mut t = tags(&[("highway", "residential")]);
        if rng.gen_bool(0.2) {
            t.insert("oneway".into(), "yes".into());
        }
        b.add_way(100 + k as i64, vec![*a, *c], t);
    }
    b.build().0
}

// ---- corrupted traces ------------------------------------------------------

use cycletrail::preprocess::{Boundary, PreprocessConfig, PreprocessOutcome, Trajectory};

pub const AREA: (f64, f64, f64, f64) = (-0.12, 51.49, -0.08, 51.51);

pub fn area() -> Boundary {
    Boundary::rectangle(AREA.0, AREA.1, AREA.2, AREA.3).unwrap()
}

/// A ride inside `AREA` with duplicate and regressing timestamps, sub-second
/// and multi-second sampling, teleports, excursions outside the area, and
/// gaps either side of one minute.
pub fn corrupted_trace<R2: Rng>(rng: &mut R2, n: usize) -> Trajectory {
    let mut pos = at((51.5, -0.1), rng.gen_range(-300.0..300.0), rng.gen_range(-300.0..300.0));
    let mut t = 1_700_000_000.0 + rng.gen_range(0.0..1.0);
    let mut points = Vec::with_capacity(n);
    for i in 0..n {
        let r: f64 = rng.gen();
        let (dt, jump): (f64, bool) = if r < 0.05 {
            (0.0, false)
        } else if r < 0.08 {
            (-rng.gen_range(1.0..5.0), false)
        } else if r < 0.11 {
            (rng.gen_range(0.5..3.0), true)
        } else if r < 0.13 {
            (rng.gen_range(55.0..70.0), false)
        } else if r < 0.3 {
            (rng.gen_range(0.1..0.9), false)
        } else {
            (rng.gen_range(0.9..4.0), false)
        };
        t += dt;
        let mut p = pos;
        if dt > 0.0 {
            let v = rng.gen_range(0.0..12.0);
            let heading: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let step = v * dt.min(10.0);
            pos = pos.offset_m(step * heading.sin(), step * heading.cos()).unwrap();
            p = pos;
        }
        if jump {
            p = p.offset_m(rng.gen_range(-2000.0..2000.0), rng.gen_range(-2000.0..2000.0)).unwrap();
        }
        if rng.gen_bool(0.02) {
            p = GeoPoint::new(AREA.3 + 0.001, p.lon()).unwrap();
        }
        points.push(Waypoint { point: p, time: Timestamp::from_epoch_seconds(t).unwrap(), source_index: i });
    }
    Trajectory::new("c", points)
}

pub fn cleaning_config() -> PreprocessConfig {
    PreprocessConfig { boundary: Some(area()), min_points: 1, ..Default::default() }
}

/// Every output property the cleaning chain promises, or a description of
/// the first violation.
pub fn check_cleaned(out: &PreprocessOutcome, cfg: &PreprocessConfig) -> Result<(), String> {
    let boundary = cfg.boundary.as_ref().unwrap();
    let step = 1.0 / f64::from(cfg.resample_hz);
    for seg in &out.segments {
        for w in seg.points.windows(2) {
            let dt = w[1].time.epoch_seconds() - w[0].time.epoch_seconds();
            if dt != step {
                return Err(format!("{}: delta {dt}", seg.key()));
            }
            let kmh = haversine_distance(&w[0].point, &w[1].point) / dt * 3.6;
            if kmh > cfg.max_speed_kmh * (1.0 + 1e-9) {
                return Err(format!("{}: speed {kmh} km/h", seg.key()));
            }
        }
        if let Some(p) = seg.points.iter().find(|p| !boundary.contains(&p.point)) {
            return Err(format!("{}: {:?} outside the area", seg.key(), p.point));
        }
    }
    for w in out.segments.windows(2) {
        let gap = w[1].points[0].time.seconds_since(w[0].points.last().unwrap().time);
        if !(gap > cfg.gap_split_seconds) {
            return Err(format!("segments {} and {} split at a {gap} s gap", w[0].key(), w[1].key()));
        }
    }
    if cfg.min_points == 1 && out.report.splits + 1 != out.segments.len().max(1) {
        return Err(format!("{} splits for {} segments", out.report.splits, out.segments.len()));
    }
    Ok(())
}

// ---- HTTP stub ------------------------------------------------------------

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::{Arc, Mutex};

#[derive(Debug, Clone)]
pub struct Seen {
    pub method: String,
    pub target: String,
    pub body: String,
}

/// One-connection-per-request HTTP server on localhost. `respond` maps each
/// request to a status and body.
pub struct Stub {
    pub url: String,
    pub seen: Arc<Mutex<Vec<Seen>>>,
}

impl Stub {
    pub fn start<F>(respond: F) -> Stub
    where
        F: Fn(&Seen, usize) -> (u16, String) + Send + 'static,
    {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}", listener.local_addr().unwrap());
        let seen = Arc::new(Mutex::new(Vec::new()));
        let log = seen.clone();
        std::thread::spawn(move || {
            for stream in listener.incoming() {
                let Ok(mut stream) = stream else { break };
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                let mut parts = line.split_whitespace();
                let (method, target) = (parts.next().unwrap_or("").to_string(), parts.next().unwrap_or("").to_string());
                let mut len = 0;
                loop {
                    let mut h = String::new();
                    reader.read_line(&mut h).unwrap();
                    if h.trim().is_empty() {
                        break;
                    }
                    if let Some((k, v)) = h.split_once(':') {
                        if k.eq_ignore_ascii_case("content-length") {
                            len = v.trim().parse().unwrap();
                        }
                    }
                }
                let mut body = vec![0; len];
                reader.read_exact(&mut body).unwrap();
                let req = Seen { method, target, body: String::from_utf8_lossy(&body).into_owned() };
                let n = {
                    let mut l = log.lock().unwrap();
                    l.push(req.clone());
                    l.len() - 1
                };
                let (status, text) = respond(&req, n);
                let _ = write!(
                    stream,
                    "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{text}",
                    text.len()
                );
            }
        });
        Stub { url, seen }
    }

    pub fn requests(&self) -> Vec<Seen> {
        self.seen.lock().unwrap().clone()
    }
}

/// Percent-decoding for query strings.
pub fn unescape(s: &str) -> String {
    let b = s.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < b.len() {
        match b[i] {
            b'%' if i + 2 < b.len() => {
                out.push(u8::from_str_radix(&s[i + 1..i + 3], 16).unwrap());
                i += 3;
            }
            b'+' => {
                out.push(b' ');
                i += 1;
            }
            c => {
                out.push(c);
                i += 1;
            }
        }
    }
    String::from_utf8(out).unwrap()
}

// ---- enrichment and metrics fixtures --------------------------------------

use cycletrail::enrich::{assign_cycleway, enrich_trip, EnrichedPoint, Handedness, TravelDirection};
use cycletrail::metrics::{derive_variables, flag_stops, StopConfig};
use cycletrail::network::{Cycleway, CyclewayKind, WayTags};

/// Which single cycleway tag a way carries in the side-selection table.
#[derive(Debug, Clone, Copy)]
pub enum SideTag {
    Left,
    Right,
    Both,
    Untagged,
}

pub fn side_tags(t: SideTag) -> WayTags {
    let mut w = WayTags::default();
    match t {
        SideTag::Left => w.cycleway_left = Some(Cycleway::Track),
        SideTag::Right => w.cycleway_right = Some(Cycleway::Lane),
        SideTag::Both => w.cycleway_both = Some(Cycleway::Separate),
        SideTag::Untagged => {}
    }
    w
}

/// Expected effective cycleway, written out case by case: left tag is
/// track, right tag is lane, both tag is separate.
pub fn side_table() -> Vec<(TravelDirection, Handedness, SideTag, CyclewayKind)> {
    use CyclewayKind as K;
    use Handedness::*;
    use SideTag::*;
    use TravelDirection::*;
    vec![
        (Forward, LeftHandTraffic, Left, K::Track),
        (Forward, LeftHandTraffic, Right, K::None),
        (Forward, LeftHandTraffic, Both, K::Separate),
        (Forward, LeftHandTraffic, Untagged, K::None),
        (Backward, LeftHandTraffic, Left, K::None),
        (Backward, LeftHandTraffic, Right, K::Lane),
        (Backward, LeftHandTraffic, Both, K::Separate),
        (Backward, LeftHandTraffic, Untagged, K::None),
        (Undetermined, LeftHandTraffic, Left, K::None),
        (Undetermined, LeftHandTraffic, Right, K::None),
        (Undetermined, LeftHandTraffic, Both, K::Separate),
        (Undetermined, LeftHandTraffic, Untagged, K::None),
        (Forward, RightHandTraffic, Left, K::None),
        (Forward, RightHandTraffic, Right, K::Lane),
        (Forward, RightHandTraffic, Both, K::Separate),
        (Forward, RightHandTraffic, Untagged, K::None),
        (Backward, RightHandTraffic, Left, K::Track),
        (Backward, RightHandTraffic, Right, K::None),
        (Backward, RightHandTraffic, Both, K::Separate),
        (Backward, RightHandTraffic, Untagged, K::None),
        (Undetermined, RightHandTraffic, Left, K::None),
        (Undetermined, RightHandTraffic, Right, K::None),
        (Undetermined, RightHandTraffic, Both, K::Separate),
        (Undetermined, RightHandTraffic, Untagged, K::None),
    ]
}

pub fn check_side_table() -> Result<usize, String> {
    let table = side_table();
    for (dir, hand, tag, want) in &table {
        let got = assign_cycleway(&side_tags(*tag), *dir, *hand);
        if got != *want {
            return Err(format!("{dir:?} {hand:?} {tag:?}: got {got:?}, want {want:?}"));
        }
    }
    Ok(table.len())
}

/// Ride east along a 6-node street, turn, and ride back. Returns the
/// enriched rows.
pub fn out_and_back(hand: Handedness) -> Vec<EnrichedPoint> {
    let net = street(6, 80.0, &[("cycleway:left", "track"), ("cycleway:right", "lane")], &[]);
    let mut pts: Vec<GeoPoint> = (0..=70).map(|i| at((51.5, -0.1), 20.0 + 5.0 * i as f64, 0.0)).collect();
    pts.extend((1..=70).map(|i| at((51.5, -0.1), 370.0 - 5.0 * i as f64, 0.0)));
    let trip = cycletrail::matcher::match_segment(&net, &segment("oab", &pts), &MatcherConfig::default()).unwrap();
    enrich_trip(&net, &trip, hand, "p", None).0
}

/// Direction from the order of node ids along the street (ids increase
/// eastward).
pub fn monotone_direction(nodes: &[i64]) -> TravelDirection {
    if nodes.len() < 2 {
        TravelDirection::Undetermined
    } else if nodes.windows(2).all(|w| w[1] > w[0]) {
        TravelDirection::Forward
    } else if nodes.windows(2).all(|w| w[1] < w[0]) {
        TravelDirection::Backward
    } else {
        TravelDirection::Undetermined
    }
}

pub fn check_out_and_back() -> Result<(), String> {
    for hand in [Handedness::LeftHandTraffic, Handedness::RightHandTraffic] {
        let rows = out_and_back(hand);
        for r in &rows {
            let want = monotone_direction(&r.node_sequence);
            if r.direction != want {
                return Err(format!("point {}: {:?} but nodes {:?}", r.point_seq, r.direction, r.node_sequence));
            }
        }
        let dirs: Vec<TravelDirection> = rows.iter().map(|r| r.direction).filter(|d| *d != TravelDirection::Undetermined).collect();
        let flip = dirs.iter().position(|d| *d == TravelDirection::Backward).ok_or("never backward")?;
        if flip == 0 || dirs[flip..].iter().any(|d| *d != TravelDirection::Backward) {
            return Err(format!("direction sequence does not flip once: {dirs:?}"));
        }
        let turn = rows.iter().position(|r| r.direction == TravelDirection::Backward).unwrap();
        if !(60..=80).contains(&rows[turn].point_seq) {
            return Err(format!("flip at point {}, turn is at 70", rows[turn].point_seq));
        }
        let left_side = |d: TravelDirection| (d == TravelDirection::Forward) == (hand == Handedness::LeftHandTraffic);
        for r in rows.iter().filter(|r| r.direction != TravelDirection::Undetermined) {
            let want = if left_side(r.direction) { CyclewayKind::Track } else { CyclewayKind::Lane };
            if r.effective_cycleway != want {
                return Err(format!("point {}: {:?} on {:?}", r.point_seq, r.effective_cycleway, r.direction));
            }
        }
    }
    Ok(())
}

/// A bare enriched row with the given arriving leg.
pub fn row(trip: &str, seq: usize, leg_m: f64, leg_s: f64) -> EnrichedPoint {
    EnrichedPoint {
        trip_id: trip.into(),
        segment_index: 0,
        point_seq: seq,
        snapped: at((51.5, -0.1), 0.0, 0.0),
        way_id: Some(1),
        offset_m: 0.0,
        leg_distance_m: leg_m,
        leg_duration_s: leg_s,
        tags: WayTags::default(),
        direction: TravelDirection::Forward,
        effective_cycleway: CyclewayKind::None,
        signals_count: 0,
        stopped: false,
        participant_id: "p".into(),
        node_sequence: vec![],
    }
}

/// Rows at 1 Hz with the given per-second speeds (first row has a zero leg).
pub fn rows_at(trip: &str, speeds: &[f64]) -> Vec<EnrichedPoint> {
    std::iter::once(row(trip, 0, 0.0, 0.0))
        .chain(speeds.iter().enumerate().map(|(i, v)| row(trip, i + 1, *v, 1.0)))
        .collect()
}

pub fn check_stop_budget<R2: Rng>(rng: &mut R2, trials: usize) -> Result<(), String> {
    let cfg = StopConfig::default();
    for k in 0..trials {
        let mut speeds = Vec::new();
        let with_stop = k % 2 == 0;
        for _ in 0..rng.gen_range(1..5) {
            speeds.extend((0..rng.gen_range(5..60)).map(|_| rng.gen_range(1.0..9.0)));
            if with_stop {
                speeds.extend((0..rng.gen_range(21..80)).map(|_| rng.gen_range(0.0..0.29)));
            }
        }
        speeds.extend((0..5).map(|_| 5.0));
        let mut rows = rows_at("a", &speeds);
        flag_stops(&mut rows, &cfg);
        let v = derive_variables("p", &rows).map_err(|e| e.to_string())?;
        let total = cycletrail::geo::fsum(rows.iter().map(|r| r.leg_duration_s));
        let stopped = cycletrail::geo::fsum(rows.iter().filter(|r| r.stopped).map(|r| r.leg_duration_s));
        let moving = cycletrail::geo::fsum(rows.iter().filter(|r| !r.stopped).map(|r| r.leg_duration_s));
        if moving + stopped != total || v.total_time_s != total {
            return Err(format!("trial {k}: {moving} + {stopped} != {total}"));
        }
        if v.avg_moving_speed_kmh < v.avg_speed_kmh * (1.0 - 1e-12) {
            return Err(format!("trial {k}: moving {} < average {}", v.avg_moving_speed_kmh, v.avg_speed_kmh));
        }
        let equal = (v.avg_moving_speed_kmh - v.avg_speed_kmh).abs() <= 1e-9 * v.avg_speed_kmh;
        if equal != (stopped == 0.0) || (stopped > 0.0) != with_stop {
            return Err(format!("trial {k}: stopped {stopped} s, speeds equal: {equal}"));
        }
    }
    Ok(())
}

/// 1.6 km straight ride through two signals; returns the signal density.
pub fn signal_density_fixture() -> f64 {
    let net = street(9, 200.0, &[], &[3, 6]);
    let pts: Vec<GeoPoint> = (0..=320).map(|i| at((51.5, -0.1), 5.0 * i as f64, 0.0)).collect();
    let trip = cycletrail::matcher::match_segment(&net, &segment("sig", &pts), &MatcherConfig::default()).unwrap();
    let mut rows = enrich_trip(&net, &trip, Handedness::LeftHandTraffic, "p", None).0;
    flag_stops(&mut rows, &StopConfig::default());
    derive_variables("p", &rows).unwrap().signal_density_per_km
}

// ---- published evaluation table -------------------------------------------

/// (length, d+, d-, error rate %) per trajectory, then the total row.
pub const PAPER_ROWS: [(f64, f64, f64, f64); 15] = [
    (11440.20, 82.50, 42.83, 1.10),
    (5743.00, 3.80, 0.00, 0.07),
    (626.10, 0.00, 0.00, 0.00),
    (265.60, 0.00, 0.00, 0.00),
    (9217.30, 0.00, 0.00, 0.00),
    (904.80, 0.00, 0.00, 0.00),
    (11516.60, 310.60, 367.43, 5.89),
    (10977.40, 42.60, 161.22, 1.86),
    (18506.00, 1271.50, 2619.59, 21.03),
    (1278.80, 0.00, 0.00, 0.00),
    (699.10, 53.20, 29.90, 11.89),
    (13952.30, 294.00, 500.43, 5.69),
    (7385.20, 217.80, 496.98, 9.68),
    (8760.60, 16.90, 9.79, 0.30),
    (14352.10, 2.30, 0.00, 0.02),
];
pub const PAPER_TOTAL: (f64, f64, f64, f64) = (115625.10, 2295.20, 4228.17, 5.64);

pub fn check_paper_table() -> Result<f64, String> {
    use cycletrail::evaluation::EvaluationReport;
    let mut rows = Vec::new();
    for (i, &(d0, dp, dm, want)) in PAPER_ROWS.iter().enumerate() {
        let r = EvaluationReport::from_lengths((i + 1).to_string(), d0, dp, dm).map_err(|e| e.to_string())?;
        if (r.error_rate_pct - want).abs() > 0.005 {
            return Err(format!("row {}: {} vs {want}", i + 1, r.error_rate_pct));
        }
        rows.push(r);
    }
    let t = EvaluationReport::total(&rows).map_err(|e| e.to_string())?;
    let (d0, dp, dm, want) = PAPER_TOTAL;
    if (t.d0_m - d0).abs() > 0.005 || (t.d_plus_m - dp).abs() > 0.005 || (t.d_minus_m - dm).abs() > 0.005 {
        return Err(format!("total lengths {} {} {}", t.d0_m, t.d_plus_m, t.d_minus_m));
    }
    if (t.error_rate_pct - want).abs() > 0.005 {
        return Err(format!("total rate {}", t.error_rate_pct));
    }
    Ok(t.error_rate_pct)
}

// ---- toy fixture ----------------------------------------------------------

use std::path::{Path, PathBuf};

pub fn toy_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/toy")
}

/// Copy of the toy configuration writing into `out`, with `extra` TOML
/// appended (top-level keys must come before any table, so `extra` may only
/// add tables).
pub fn toy_config(dir: &Path, out: &Path, extra: &str) -> PathBuf {
    let toy = toy_dir();
    let text = std::fs::read_to_string(toy.join("config.toml")).unwrap();
    let mut lines = Vec::new();
    for l in text.lines() {
        let l = match l.split_once(" = ") {
            Some((k @ ("input_dir" | "network_path" | "participants_path" | "truth_path"), v)) => {
                format!("{k} = {:?}", toy.join(v.trim_matches('"')).display().to_string())
            }
            Some(("output_dir", _)) => format!("output_dir = {:?}", out.display().to_string()),
            _ => l.to_string(),
        };
        lines.push(l);
    }
    let body = lines.join("\n").replace("[backend]\nkind = \"builtin\"", "");
    let path = dir.join("config.toml");
    std::fs::write(&path, format!("{body}\n{extra}\n")).unwrap();
    path
}

/// Number of columns in the header of a CSV table.
pub fn columns(path: &Path) -> usize {
    let text = std::fs::read_to_string(path).unwrap();
    text.lines().next().unwrap_or("").split(',').count()
}
