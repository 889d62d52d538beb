//! Candidate lattice construction and Viterbi decoding.

use log::debug;

use super::{emission_log_prob, traversed_nodes, transition_log_prob, MatchedLeg, MatchedPoint, MatchedTrip, MatcherConfig};
use crate::error::{Error, Result};
use crate::geo::haversine_distance;
use crate::network::{routes_from, Anchor, Candidate, RoadNetwork, Route};
use crate::preprocess::TripSegment;

/// How the matcher moves between two candidates.
#[derive(Debug, Clone, PartialEq)]
pub enum TransitionRoute {
    /// Short backward step on the same arc, read as standing still.
    Stationary,
    Routed(Route),
    Unreachable,
}

impl TransitionRoute {
    pub fn distance_m(&self) -> Option<f64> {
        match self {
            TransitionRoute::Stationary => Some(0.0),
            TransitionRoute::Routed(r) => Some(r.distance_m),
            TransitionRoute::Unreachable => None,
        }
    }
}

fn is_stationary(from: &Anchor, to: &Anchor, cfg: &MatcherConfig) -> bool {
    from.arc == to.arc && to.offset_m < from.offset_m && from.offset_m - to.offset_m <= cfg.backward_tolerance_m
}

fn transitions(net: &RoadNetwork, from: &Anchor, targets: &[Anchor], gc_m: f64, cfg: &MatcherConfig) -> Vec<TransitionRoute> {
    let mut out = vec![TransitionRoute::Unreachable; targets.len()];
    let mut routed_idx = Vec::new();
    let mut routed = Vec::new();
    for (i, t) in targets.iter().enumerate() {
        if is_stationary(from, t, cfg) {
            out[i] = TransitionRoute::Stationary;
        } else {
            routed_idx.push(i);
            routed.push(*t);
        }
    }
    let limit = gc_m + cfg.route_search_slack_m;
    for (i, r) in routed_idx.into_iter().zip(routes_from(net, from, &routed, limit)) {
        if let Some(r) = r {
            out[i] = TransitionRoute::Routed(r);
        }
    }
    out
}

/// Transition between two anchors as seen by the matcher, given the
/// great-circle distance between the two observations.
pub fn transition_route(net: &RoadNetwork, from: &Anchor, to: &Anchor, gc_m: f64, cfg: &MatcherConfig) -> TransitionRoute {
    transitions(net, from, std::slice::from_ref(to), gc_m, cfg).pop().unwrap_or(TransitionRoute::Unreachable)
}

fn anchor(c: &Candidate) -> Anchor {
    Anchor::new(c.arc, c.offset_m)
}

struct Layer {
    seq: usize,
    candidates: Vec<Candidate>,
    score: Vec<f64>,
    back: Vec<usize>,
}

/// Match a 1 Hz segment to the network.
///
/// Points without candidates, or unreachable from every surviving state,
/// are discarded and the lattice continues from the last retained point.
/// Equal scores resolve to the lowest candidate index.
pub fn match_segment(net: &RoadNetwork, seg: &TripSegment, cfg: &MatcherConfig) -> Result<MatchedTrip> {
    cfg.validate()?;
    let mut layers: Vec<Layer> = Vec::new();
    let mut discarded = Vec::new();

    for (seq, wp) in seg.points.iter().enumerate() {
        let candidates = net.nearest_candidates(&wp.point, cfg.candidate_radius_m, cfg.candidate_k);
        if candidates.is_empty() {
            discarded.push(seq);
            continue;
        }
        let emission: Vec<f64> = candidates.iter().map(|c| emission_log_prob(c.distance_m, cfg.sigma_m)).collect();
        let Some(prev) = layers.last() else {
            let n = candidates.len();
            layers.push(Layer { seq, candidates, score: emission, back: vec![0; n] });
            continue;
        };
        let gc = haversine_distance(&seg.points[prev.seq].point, &wp.point);
        let targets: Vec<Anchor> = candidates.iter().map(anchor).collect();
        let mut score = vec![f64::NEG_INFINITY; candidates.len()];
        let mut back = vec![0; candidates.len()];
        for (i, pc) in prev.candidates.iter().enumerate() {
            if prev.score[i] == f64::NEG_INFINITY {
                continue;
            }
            let routes = transitions(net, &anchor(pc), &targets, gc, cfg);
            for (j, r) in routes.iter().enumerate() {
                let s = prev.score[i] + transition_log_prob(gc, r.distance_m(), cfg.beta_m) + emission[j];
                if s > score[j] {
                    score[j] = s;
                    back[j] = i;
                }
            }
        }
        if score.iter().all(|s| *s == f64::NEG_INFINITY) {
            debug!("{}: point {seq} unreachable from previous states, discarded", seg.key());
            discarded.push(seq);
            continue;
        }
        layers.push(Layer { seq, candidates, score, back });
    }

    let last = layers.last().ok_or(Error::NoMatch)?;
    let mut best = 0;
    for (j, s) in last.score.iter().enumerate() {
        if *s > last.score[best] {
            best = j;
        }
    }
    let log_probability = last.score[best];
    let mut states = vec![0; layers.len()];
    states[layers.len() - 1] = best;
    for t in (1..layers.len()).rev() {
        states[t - 1] = layers[t].back[states[t]];
    }

    let chosen: Vec<(usize, Candidate)> = layers.iter().zip(&states).map(|(l, &s)| (l.seq, l.candidates[s])).collect();
    let mut trip = assemble(net, seg, cfg, &chosen, discarded);
    trip.log_probability = Some(log_probability);
    Ok(trip)
}

/// Turn decoded states into points and legs. Anchors that step back within
/// the jitter tolerance are held at the previous position so that legs never
/// run backwards.
fn assemble(net: &RoadNetwork, seg: &TripSegment, cfg: &MatcherConfig, chosen: &[(usize, Candidate)], mut discarded: Vec<usize>) -> MatchedTrip {
    let mut points: Vec<MatchedPoint> = Vec::new();
    let mut anchors: Vec<Anchor> = Vec::new();
    let mut raw_prev: Option<Anchor> = None;

    for &(seq, cand) in chosen {
        let raw = anchor(&cand);
        let wp = &seg.points[seq];
        let mut effective = raw;
        if let (Some(prev_raw), Some(prev_eff)) = (raw_prev, anchors.last()) {
            let looped = prev_raw.arc == raw.arc && raw.offset_m < prev_raw.offset_m && !is_stationary(&prev_raw, &raw, cfg);
            if raw.arc == prev_eff.arc && raw.offset_m < prev_eff.offset_m && !looped {
                effective = *prev_eff;
            }
        }
        let snapped = if effective == raw { cand.point } else { net.point_on_arc(effective.arc, effective.offset_m) };
        let emission_distance_m = haversine_distance(&wp.point, &snapped);
        if emission_distance_m > cfg.candidate_radius_m {
            discarded.push(seq);
            continue;
        }
        raw_prev = Some(raw);
        anchors.push(effective);
        points.push(MatchedPoint {
            point_seq: seq,
            time: wp.time,
            observed: wp.point,
            snapped,
            arc: Some(effective.arc),
            way_id: Some(cand.way_id),
            offset_m: effective.offset_m,
            emission_distance_m,
        });
    }

    let mut legs = Vec::with_capacity(points.len().saturating_sub(1));
    for i in 1..points.len() {
        let (a, b) = (&anchors[i - 1], &anchors[i]);
        let route = routes_from(net, a, std::slice::from_ref(b), f64::INFINITY)
            .pop()
            .flatten()
            .unwrap_or_else(|| Route { distance_m: 0.0, arcs: vec![a.arc] });
        let mut leg = MatchedLeg {
            from_seq: points[i - 1].point_seq,
            to_seq: points[i].point_seq,
            node_sequence: route.node_sequence(net, a, b),
            distance_m: route.distance_m,
            duration_s: points[i].time.seconds_since(points[i - 1].time),
            intersections: 0,
        };
        leg.intersections = traversed_nodes(net, &leg, &points[i - 1].snapped, &points[i].snapped)
            .into_iter()
            .filter(|&id| net.degree(id) >= 3)
            .count();
        legs.push(leg);
    }
    discarded.sort_unstable();
    MatchedTrip {
        trip_id: seg.trip_id.clone(),
        segment_index: seg.segment_index,
        points,
        legs,
        discarded,
        log_probability: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::{GeoPoint, Timestamp};
    use crate::network::tests::line_network;
    use crate::network::route_distance;
    use crate::preprocess::Waypoint;

    fn segment(points: &[GeoPoint]) -> TripSegment {
        TripSegment {
            trip_id: "t".into(),
            segment_index: 0,
            points: points
                .iter()
                .enumerate()
                .map(|(i, p)| Waypoint { point: *p, time: Timestamp::from_epoch_seconds(i as f64).unwrap(), source_index: i })
                .collect(),
        }
    }

    #[test]
    fn noiseless_points_on_one_way() {
        let net = line_network(3, 0.001, &[("highway", "residential"), ("oneway", "yes")]);
        let o = GeoPoint::new(0.0, 0.0).unwrap();
        let pts: Vec<GeoPoint> = (0..6).map(|i| o.offset_m(5.0 + 30.0 * i as f64, 0.0).unwrap()).collect();
        let trip = match_segment(&net, &segment(&pts), &MatcherConfig::default()).unwrap();
        assert!(trip.discarded.is_empty());
        assert_eq!(trip.points.len(), 6);
        assert_eq!(trip.legs.len(), 5);
        for p in &trip.points {
            assert!(p.emission_distance_m < 1e-6, "{}", p.emission_distance_m);
            assert_eq!(p.way_id, Some(100));
        }
        for (leg, w) in trip.legs.iter().zip(trip.points.windows(2)) {
            assert!((leg.distance_m - 30.0).abs() < 1e-3, "{}", leg.distance_m);
            assert_eq!(leg.duration_s, 1.0);
            let d = route_distance(
                &net,
                &Anchor::new(w[0].arc.unwrap(), w[0].offset_m),
                &Anchor::new(w[1].arc.unwrap(), w[1].offset_m),
            )
            .unwrap();
            assert!((leg.distance_m - d).abs() <= 1e-6 * d.max(1.0));
        }
        assert_eq!(trip.legs.iter().map(|l| l.duration_s).sum::<f64>(), 5.0);
    }

    #[test]
    fn far_outlier_is_discarded() {
        let net = line_network(3, 0.001, &[("highway", "residential")]);
        let o = GeoPoint::new(0.0, 0.0).unwrap();
        let mut pts: Vec<GeoPoint> = (0..5).map(|i| o.offset_m(10.0 + 8.0 * i as f64, 1.0).unwrap()).collect();
        pts[2] = pts[2].offset_m(0.0, 500.0).unwrap();
        let trip = match_segment(&net, &segment(&pts), &MatcherConfig::default()).unwrap();
        assert_eq!(trip.discarded, vec![2]);
        assert_eq!(trip.points.len(), 4);
        assert_eq!(trip.legs[1].from_seq, 1);
        assert_eq!(trip.legs[1].to_seq, 3);
        assert_eq!(trip.legs[1].duration_s, 2.0);
    }

    #[test]
    fn nothing_nearby_is_no_match() {
        let net = line_network(2, 0.001, &[("highway", "residential")]);
        let far = GeoPoint::new(1.0, 1.0).unwrap();
        assert!(matches!(match_segment(&net, &segment(&[far, far]), &MatcherConfig::default()), Err(Error::NoMatch)));
    }

    #[test]
    fn backward_jitter_is_held_in_place() {
        let net = line_network(3, 0.001, &[("highway", "residential")]);
        let o = GeoPoint::new(0.0, 0.0).unwrap();
        let xs = [20.0, 25.0, 23.0, 30.0];
        let pts: Vec<GeoPoint> = xs.iter().map(|x| o.offset_m(*x, 2.0).unwrap()).collect();
        let trip = match_segment(&net, &segment(&pts), &MatcherConfig::default()).unwrap();
        assert!(trip.discarded.is_empty());
        let total: f64 = trip.legs.iter().map(|l| l.distance_m).sum();
        assert!((total - 10.0).abs() < 1e-3, "{total}");
        assert_eq!(trip.legs[1].distance_m, 0.0);
    }

    #[test]
    fn reruns_are_identical() {
        let net = line_network(4, 0.001, &[("highway", "residential")]);
        let o = GeoPoint::new(0.0, 0.0).unwrap();
        let pts: Vec<GeoPoint> = (0..20).map(|i| o.offset_m(3.0 + 6.0 * i as f64, if i % 2 == 0 { 3.0 } else { -3.0 }).unwrap()).collect();
        let a = match_segment(&net, &segment(&pts), &MatcherConfig::default()).unwrap();
        let b = match_segment(&net, &segment(&pts), &MatcherConfig::default()).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }
}
