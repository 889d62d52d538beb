//! R-tree over arc segments for candidate lookup.

use std::collections::HashMap;

use rstar::{RTree, RTreeObject, AABB};

use super::{ArcId, RoadNetwork};
use crate::geo::{haversine_distance, project_onto_segment, GeoPoint, EARTH_RADIUS_M};

/// A road position near a GPS point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub arc: ArcId,
    pub way_id: i64,
    /// Closest point on the arc polyline.
    pub point: GeoPoint,
    /// Distance from the arc start to `point`.
    pub offset_m: f64,
    /// Great-circle distance from the query point to `point`.
    pub distance_m: f64,
}

#[derive(Debug, Clone)]
struct SegmentEntry {
    arc: ArcId,
    segment: usize,
    envelope: AABB<[f64; 2]>,
}

impl RTreeObject for SegmentEntry {
    type Envelope = AABB<[f64; 2]>;

    fn envelope(&self) -> Self::Envelope {
        self.envelope
    }
}

#[derive(Debug, Clone, Default)]
pub(super) struct SpatialIndex {
    tree: RTree<SegmentEntry>,
}

impl SpatialIndex {
    pub(super) fn build(net: &RoadNetwork) -> SpatialIndex {
        let mut entries = Vec::new();
        for arc in net.arcs() {
            for (segment, w) in arc.node_indices().windows(2).enumerate() {
                let (a, b) = (net.node_at(w[0]).point, net.node_at(w[1]).point);
                entries.push(SegmentEntry {
                    arc: arc.id,
                    segment,
                    envelope: AABB::from_corners([a.lon(), a.lat()], [b.lon(), b.lat()]),
                });
            }
        }
        SpatialIndex { tree: RTree::bulk_load(entries) }
    }

    pub(super) fn nearest_candidates(&self, net: &RoadNetwork, p: &GeoPoint, radius_m: f64, k: usize) -> Vec<Candidate> {
        if !(radius_m > 0.0) || k == 0 {
            return Vec::new();
        }
        // padded search box; exact distances are checked below
        let dlat = (radius_m / EARTH_RADIUS_M).to_degrees() * 1.01;
        let coslat = p.lat().to_radians().cos().max(1e-6);
        let dlon = dlat / coslat;
        let query = AABB::from_corners([p.lon() - dlon, p.lat() - dlat], [p.lon() + dlon, p.lat() + dlat]);

        let mut best: HashMap<ArcId, Candidate> = HashMap::new();
        for entry in self.tree.locate_in_envelope_intersecting(&query) {
            let arc = net.arc(entry.arc);
            let nodes = arc.node_indices();
            let (a, b) = (net.node_at(nodes[entry.segment]).point, net.node_at(nodes[entry.segment + 1]).point);
            let (proj, t) = project_onto_segment(p, &a, &b);
            let distance_m = haversine_distance(p, &proj);
            if distance_m > radius_m {
                continue;
            }
            let c0 = arc.cumulative()[entry.segment];
            let c1 = arc.cumulative()[entry.segment + 1];
            let cand = Candidate { arc: arc.id, way_id: arc.way_id, point: proj, offset_m: c0 + t * (c1 - c0), distance_m };
            best.entry(arc.id)
                .and_modify(|c| {
                    if (cand.distance_m, cand.offset_m) < (c.distance_m, c.offset_m) {
                        *c = cand;
                    }
                })
                .or_insert(cand);
        }
        let mut out: Vec<Candidate> = best.into_values().collect();
        out.sort_by(|x, y| {
            tie_key(x.distance_m).cmp(&tie_key(y.distance_m)).then(x.way_id.cmp(&y.way_id)).then(x.arc.cmp(&y.arc))
        });
        out.truncate(k);
        out
    }
}

/// Distances are compared at micrometre resolution so that geometrically
/// equidistant candidates fall back to the way-id ordering.
fn tie_key(distance_m: f64) -> i64 {
    (distance_m * 1e6).round() as i64
}
