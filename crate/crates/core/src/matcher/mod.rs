//! Map matching: a built-in HMM matcher decoded with Viterbi, and a client
//! for OSRM-compatible match services.

mod hmm;
pub mod osrm;

use serde::{Deserialize, Serialize};

pub use hmm::{match_segment, transition_route, TransitionRoute};

use crate::error::{Error, Result};
use crate::geo::{fsum, haversine_distance, GeoPoint, Timestamp};
use crate::network::{ArcId, RoadNetwork};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MatcherConfig {
    /// GPS noise standard deviation (m).
    pub sigma_m: f64,
    /// Scale of the route/great-circle discrepancy (m).
    pub beta_m: f64,
    pub candidate_radius_m: f64,
    pub candidate_k: usize,
    /// Backward steps on the same arc up to this length are read as GPS
    /// jitter of a (nearly) stationary rider instead of a loop.
    pub backward_tolerance_m: f64,
    /// Routes longer than the great-circle distance plus this are treated
    /// as unreachable.
    pub route_search_slack_m: f64,
}

impl Default for MatcherConfig {
    fn default() -> Self {
        MatcherConfig {
            sigma_m: 4.07,
            beta_m: 3.0,
            candidate_radius_m: 50.0,
            candidate_k: 8,
            backward_tolerance_m: 30.0,
            route_search_slack_m: 1000.0,
        }
    }
}

impl MatcherConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("sigma_m", self.sigma_m),
            ("beta_m", self.beta_m),
            ("candidate_radius_m", self.candidate_radius_m),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidConfig(format!("{name} must be strictly positive, got {v}")));
            }
        }
        if self.candidate_k == 0 {
            return Err(Error::InvalidConfig("candidate_k must be at least 1".into()));
        }
        if !(self.backward_tolerance_m >= 0.0) || !(self.route_search_slack_m >= 0.0) {
            return Err(Error::InvalidConfig("tolerances must be non-negative".into()));
        }
        Ok(())
    }
}

/// Log of a zero-mean Gaussian density at `distance_m`.
pub fn emission_log_prob(distance_m: f64, sigma_m: f64) -> f64 {
    let z = distance_m / sigma_m;
    -0.5 * z * z - (sigma_m * (2.0 * std::f64::consts::PI).sqrt()).ln()
}

/// Log of an exponential density in `|gc - route|`; `None` means the
/// candidates are not connected and the transition is forbidden.
pub fn transition_log_prob(gc_m: f64, route_m: Option<f64>, beta_m: f64) -> f64 {
    match route_m {
        Some(route) => -(gc_m - route).abs() / beta_m - beta_m.ln(),
        None => f64::NEG_INFINITY,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchedPoint {
    /// Index of the point within its trip segment.
    pub point_seq: usize,
    pub time: Timestamp,
    pub observed: GeoPoint,
    pub snapped: GeoPoint,
    /// Arc of the built-in network; absent for remote matches.
    pub arc: Option<ArcId>,
    pub way_id: Option<i64>,
    /// Distance along the arc in travel direction.
    pub offset_m: f64,
    pub emission_distance_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchedLeg {
    pub from_seq: usize,
    pub to_seq: usize,
    /// OSM node ids of the road segments covered, in travel order.
    pub node_sequence: Vec<i64>,
    pub distance_m: f64,
    pub duration_s: f64,
    /// Traversed nodes with three or more neighbours.
    pub intersections: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchedTrip {
    pub trip_id: String,
    pub segment_index: usize,
    pub points: Vec<MatchedPoint>,
    /// `legs[i]` joins `points[i]` and `points[i + 1]`.
    pub legs: Vec<MatchedLeg>,
    /// `point_seq` of outliers that could not be matched.
    pub discarded: Vec<usize>,
    /// Joint log-probability of the decoded state sequence (built-in only).
    pub log_probability: Option<f64>,
}

impl MatchedTrip {
    pub fn key(&self) -> String {
        format!("{}_{}", self.trip_id, self.segment_index)
    }

    pub fn total_distance_m(&self) -> f64 {
        fsum(self.legs.iter().map(|l| l.distance_m))
    }

    pub fn total_duration_s(&self) -> f64 {
        fsum(self.legs.iter().map(|l| l.duration_s))
    }
}

/// Nodes a leg actually passes: interior entries of its node sequence, plus
/// an end entry when the matched position sits on that node.
pub fn traversed_nodes(net: &RoadNetwork, leg: &MatchedLeg, from: &GeoPoint, to: &GeoPoint) -> Vec<i64> {
    const ON_NODE_M: f64 = 0.01;
    let seq = &leg.node_sequence;
    let at = |id: i64, p: &GeoPoint| net.node(id).is_some_and(|n| haversine_distance(&n.point, p) <= ON_NODE_M);
    seq.iter()
        .enumerate()
        .filter(|&(i, &id)| {
            if i == 0 {
                at(id, from)
            } else if i + 1 == seq.len() {
                at(id, to)
            } else {
                true
            }
        })
        .map(|(_, &id)| id)
        .collect()
}

/// Count traversed intersections per leg and resolve way ids missing from
/// remote matches using the leg node pairs.
pub fn annotate_with_network(net: &RoadNetwork, trip: &mut MatchedTrip) {
    for i in 0..trip.legs.len() {
        let (from, to) = (trip.points[i].snapped, trip.points[i + 1].snapped);
        let leg = &trip.legs[i];
        let n = traversed_nodes(net, leg, &from, &to).into_iter().filter(|&id| net.degree(id) >= 3).count();
        trip.legs[i].intersections = n;
    }
    for i in 0..trip.points.len() {
        if trip.points[i].way_id.is_some() {
            continue;
        }
        let pair = |leg: &MatchedLeg, last: bool| -> Option<i64> {
            let s = &leg.node_sequence;
            if s.len() < 2 {
                return None;
            }
            let (a, b) = if last { (s[s.len() - 2], s[s.len() - 1]) } else { (s[0], s[1]) };
            net.ways_with_segment(a, b).first().copied()
        };
        let outgoing = trip.legs.get(i).and_then(|l| pair(l, false));
        let incoming = i.checked_sub(1).and_then(|j| trip.legs.get(j)).and_then(|l| pair(l, true));
        trip.points[i].way_id = outgoing.or(incoming);
    }
}
