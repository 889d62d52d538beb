//! Attach OSM attributes to matched trips: way tags, travel direction,
//! the cycleway actually ridden on and traffic signals passed.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::GeoPoint;
use crate::matcher::{traversed_nodes, MatchedTrip};
use crate::network::{CyclewayKind, RoadNetwork, Tags, WayTags};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TravelDirection {
    Forward,
    Backward,
    Undetermined,
}

impl TravelDirection {
    pub fn as_str(&self) -> &'static str {
        match self {
            TravelDirection::Forward => "forward",
            TravelDirection::Backward => "backward",
            TravelDirection::Undetermined => "undetermined",
        }
    }

    pub fn parse(s: &str) -> Option<TravelDirection> {
        [TravelDirection::Forward, TravelDirection::Backward, TravelDirection::Undetermined]
            .into_iter()
            .find(|d| d.as_str() == s)
    }

    pub fn reversed(self) -> TravelDirection {
        match self {
            TravelDirection::Forward => TravelDirection::Backward,
            TravelDirection::Backward => TravelDirection::Forward,
            TravelDirection::Undetermined => TravelDirection::Undetermined,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Handedness {
    RightHandTraffic,
    #[default]
    LeftHandTraffic,
}

impl Handedness {
    pub fn flipped(self) -> Handedness {
        match self {
            Handedness::RightHandTraffic => Handedness::LeftHandTraffic,
            Handedness::LeftHandTraffic => Handedness::RightHandTraffic,
        }
    }
}

/// Span of the tightest embedding of `leg` into `way` with strictly
/// increasing indices, if any.
fn increasing_span(way: &[i64], leg: &[i64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for start in way.iter().enumerate().filter(|&(_, &n)| n == leg[0]).map(|(i, _)| i) {
        let mut at = start;
        let mut ok = true;
        for &t in &leg[1..] {
            match way[at + 1..].iter().position(|&n| n == t) {
                Some(p) => at += 1 + p,
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            best = Some(best.map_or(at - start, |b: usize| b.min(at - start)));
        }
    }
    best
}

/// Direction of a run of leg nodes relative to the way's node order.
///
/// Closed ways are treated as cyclic, so a run crossing the closing node is
/// still ordered. When both orders embed, the tighter one wins.
pub fn direction_of_travel(way_nodes: &[i64], leg_nodes: &[i64]) -> Result<TravelDirection> {
    if let Some(&missing) = leg_nodes.iter().find(|t| !way_nodes.contains(t)) {
        return Err(Error::NodeNotOnWay { way_id: 0, node_id: missing });
    }
    if leg_nodes.len() < 2 {
        return Ok(TravelDirection::Undetermined);
    }
    let closed = way_nodes.len() > 2 && way_nodes.first() == way_nodes.last();
    let unrolled: Vec<i64> = if closed {
        way_nodes.iter().chain(&way_nodes[1..]).copied().collect()
    } else {
        way_nodes.to_vec()
    };
    let reversed: Vec<i64> = leg_nodes.iter().rev().copied().collect();
    let fwd = increasing_span(&unrolled, leg_nodes);
    let bwd = increasing_span(&unrolled, &reversed);
    Ok(match (fwd, bwd) {
        (Some(f), Some(b)) if f < b => TravelDirection::Forward,
        (Some(f), Some(b)) if b < f => TravelDirection::Backward,
        (Some(_), None) => TravelDirection::Forward,
        (None, Some(_)) => TravelDirection::Backward,
        _ => TravelDirection::Undetermined,
    })
}

/// Which side of the way the rider is on.
fn side_is_right(dir: TravelDirection, hand: Handedness) -> Option<bool> {
    match (dir, hand) {
        (TravelDirection::Undetermined, _) => None,
        (TravelDirection::Forward, Handedness::RightHandTraffic)
        | (TravelDirection::Backward, Handedness::LeftHandTraffic) => Some(true),
        _ => Some(false),
    }
}

/// Effective cycleway: the ridden side's value, else `cycleway:both`, else none.
/// Values that are not infrastructure (`no`, `none`, unknown strings) count as absent.
pub fn assign_cycleway(tags: &WayTags, dir: TravelDirection, hand: Handedness) -> CyclewayKind {
    let side = match side_is_right(dir, hand) {
        Some(true) => tags.cycleway_right.as_ref(),
        Some(false) => tags.cycleway_left.as_ref(),
        None => None,
    };
    side.and_then(|c| c.infrastructure())
        .or_else(|| tags.cycleway_both.as_ref().and_then(|c| c.infrastructure()))
        .unwrap_or(CyclewayKind::None)
}

/// Traffic signals passed on each leg. A signal node is counted at most
/// once per trip, on the first leg that passes it.
pub fn count_signals(net: &RoadNetwork, trip: &MatchedTrip) -> Vec<u32> {
    let mut seen = HashSet::new();
    trip.legs
        .iter()
        .enumerate()
        .map(|(i, leg)| {
            traversed_nodes(net, leg, &trip.points[i].snapped, &trip.points[i + 1].snapped)
                .into_iter()
                .filter(|id| net.node(*id).is_some_and(|n| n.is_traffic_signal) && seen.insert(*id))
                .count() as u32
        })
        .collect()
}

/// One row of the trip attributes table. The leg fields describe the leg
/// arriving at this point; the first point of a trip has a zero leg.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnrichedPoint {
    pub trip_id: String,
    pub segment_index: usize,
    pub point_seq: usize,
    pub snapped: GeoPoint,
    pub way_id: Option<i64>,
    pub offset_m: f64,
    pub leg_distance_m: f64,
    pub leg_duration_s: f64,
    pub tags: WayTags,
    pub direction: TravelDirection,
    pub effective_cycleway: CyclewayKind,
    pub signals_count: u32,
    /// Filled in by stop identification.
    pub stopped: bool,
    pub participant_id: String,
    /// Nodes of the arriving leg (outgoing leg for the first point).
    pub node_sequence: Vec<i64>,
}

/// Longest run of `nodes` lying on `way`, taken from the end (`from_end`)
/// or the start.
fn run_on_way(nodes: &[i64], way: &[i64], from_end: bool) -> Vec<i64> {
    let on = |n: &i64| way.contains(n);
    if from_end {
        let k = nodes.iter().rev().take_while(|n| on(n)).count();
        nodes[nodes.len() - k..].to_vec()
    } else {
        nodes.iter().take_while(|n| on(n)).copied().collect()
    }
}

/// Enrich every retained point of a matched trip.
///
/// Tags come from the local network, then from `backfill` (tags fetched
/// remotely by way id). Points whose way cannot be resolved get empty tags
/// and a warning.
pub fn enrich_trip(
    net: &RoadNetwork,
    trip: &MatchedTrip,
    hand: Handedness,
    participant_id: &str,
    backfill: Option<&BTreeMap<i64, Tags>>,
) -> (Vec<EnrichedPoint>, Vec<String>) {
    let signals = count_signals(net, trip);
    let mut warnings = Vec::new();
    let mut rows = Vec::with_capacity(trip.points.len());
    for (i, p) in trip.points.iter().enumerate() {
        let incoming = i.checked_sub(1).map(|j| &trip.legs[j]);
        let evidence = incoming.or(trip.legs.first());
        let way = p.way_id.and_then(|id| net.way(id));
        let tags = match (p.way_id, way) {
            (_, Some(w)) => w.tags.clone(),
            (Some(id), None) => match backfill.and_then(|b| b.get(&id)) {
                Some(t) => WayTags::from_tags(t),
                None => {
                    warnings.push(format!("{} point {}: way {id} not in network", trip.key(), p.point_seq));
                    WayTags::default()
                }
            },
            (None, None) => {
                warnings.push(format!("{} point {}: no way id", trip.key(), p.point_seq));
                WayTags::default()
            }
        };
        let direction = match (way, evidence) {
            (Some(w), Some(leg)) => {
                let run = run_on_way(&leg.node_sequence, &w.node_ids, incoming.is_some());
                match direction_of_travel(&w.node_ids, &run) {
                    Ok(d) => d,
                    Err(e) => {
                        warnings.push(format!("{} point {}: {e}", trip.key(), p.point_seq));
                        TravelDirection::Undetermined
                    }
                }
            }
            _ => TravelDirection::Undetermined,
        };
        rows.push(EnrichedPoint {
            trip_id: trip.trip_id.clone(),
            segment_index: trip.segment_index,
            point_seq: p.point_seq,
            snapped: p.snapped,
            way_id: p.way_id,
            offset_m: p.offset_m,
            leg_distance_m: incoming.map_or(0.0, |l| l.distance_m),
            leg_duration_s: incoming.map_or(0.0, |l| l.duration_s),
            effective_cycleway: assign_cycleway(&tags, direction, hand),
            tags,
            direction,
            signals_count: i.checked_sub(1).map_or(0, |j| signals[j]),
            stopped: false,
            participant_id: participant_id.to_string(),
            node_sequence: evidence.map(|l| l.node_sequence.clone()).unwrap_or_default(),
        });
    }
    (rows, warnings)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::Cycleway;
    use TravelDirection::*;

    #[test]
    fn direction_examples() {
        let s = [1, 2, 3, 4, 5];
        assert_eq!(direction_of_travel(&s, &[2, 3, 4]).unwrap(), Forward);
        assert_eq!(direction_of_travel(&s, &[4, 3, 2]).unwrap(), Backward);
        assert_eq!(direction_of_travel(&[1, 2, 3], &[2]).unwrap(), Undetermined);
        assert_eq!(direction_of_travel(&s, &[2, 4, 3]).unwrap(), Undetermined);
        assert!(matches!(direction_of_travel(&s, &[2, 9]), Err(Error::NodeNotOnWay { node_id: 9, .. })));
    }

    #[test]
    fn closed_way_wraps() {
        let ring = [1, 2, 3, 4, 1];
        assert_eq!(direction_of_travel(&ring, &[4, 1, 2]).unwrap(), Forward);
        assert_eq!(direction_of_travel(&ring, &[2, 1, 4]).unwrap(), Backward);
        assert_eq!(direction_of_travel(&ring, &[1, 2]).unwrap(), Forward);
    }

    #[test]
    fn cycleway_examples() {
        let t = WayTags { cycleway_left: Some(Cycleway::Track), ..Default::default() };
        assert_eq!(assign_cycleway(&t, Forward, Handedness::LeftHandTraffic), CyclewayKind::Track);
        let t = WayTags {
            cycleway_left: Some(Cycleway::Lane),
            cycleway_both: Some(Cycleway::SharedLane),
            ..Default::default()
        };
        assert_eq!(assign_cycleway(&t, Backward, Handedness::LeftHandTraffic), CyclewayKind::SharedLane);
        let t = WayTags { cycleway_both: Some(Cycleway::Lane), ..Default::default() };
        assert_eq!(assign_cycleway(&t, Undetermined, Handedness::RightHandTraffic), CyclewayKind::Lane);
        let t = WayTags { cycleway_right: Some(Cycleway::None), ..Default::default() };
        assert_eq!(assign_cycleway(&t, Forward, Handedness::RightHandTraffic), CyclewayKind::None);
    }
}
