//! Dijkstra between positions on arcs.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use serde::{Deserialize, Serialize};

use super::{ArcId, RoadNetwork};
use crate::error::{Error, Result};

/// A position `offset_m` meters from the start of an arc.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Anchor {
    pub arc: ArcId,
    pub offset_m: f64,
}

impl Anchor {
    pub fn new(arc: ArcId, offset_m: f64) -> Self {
        Anchor { arc, offset_m }
    }
}

/// A shortest path between two anchors.
#[derive(Debug, Clone, PartialEq)]
pub struct Route {
    pub distance_m: f64,
    /// Arcs touched, from the start anchor's arc to the end anchor's arc.
    pub arcs: Vec<ArcId>,
}

impl Route {
    /// OSM node ids of every segment the route touches, in travel order:
    /// the segment holding the start anchor through the segment holding the
    /// end anchor.
    pub fn node_sequence(&self, net: &RoadNetwork, from: &Anchor, to: &Anchor) -> Vec<i64> {
        let mut idx: Vec<usize> = Vec::new();
        let first = net.arc(from.arc);
        let start = first.segment_starting_at(from.offset_m);
        if self.arcs.len() == 1 {
            let end = first.node_closing(to.offset_m).max(start + 1);
            idx.extend_from_slice(&first.node_indices()[start..=end]);
        } else {
            idx.extend_from_slice(&first.node_indices()[start..]);
            for &mid in &self.arcs[1..self.arcs.len() - 1] {
                idx.extend_from_slice(&net.arc(mid).node_indices()[1..]);
            }
            let last = net.arc(to.arc);
            let end = last.node_closing(to.offset_m);
            idx.extend_from_slice(&last.node_indices()[1..=end]);
        }
        let mut ids: Vec<i64> = idx.into_iter().map(|i| net.node_at(i).node_id).collect();
        ids.dedup();
        ids
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct QueueItem {
    dist: f64,
    vertex: usize,
}

impl Eq for QueueItem {}

impl Ord for QueueItem {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on (dist, vertex)
        other.dist.total_cmp(&self.dist).then_with(|| other.vertex.cmp(&self.vertex))
    }
}

impl PartialOrd for QueueItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Shortest routes from one anchor to many, ignoring anything longer than
/// `limit_m`. Direction of every arc is honoured.
pub(crate) fn routes_from(net: &RoadNetwork, from: &Anchor, targets: &[Anchor], limit_m: f64) -> Vec<Option<Route>> {
    let src = net.arc(from.arc);
    let mut out: Vec<Option<Route>> = vec![None; targets.len()];
    let mut pending: Vec<usize> = Vec::new();
    for (i, t) in targets.iter().enumerate() {
        if t.arc == from.arc && t.offset_m >= from.offset_m {
            let d = t.offset_m - from.offset_m;
            if d <= limit_m {
                out[i] = Some(Route { distance_m: d, arcs: vec![from.arc] });
            }
        } else {
            pending.push(i);
        }
    }
    if pending.is_empty() {
        return out;
    }

    let start_dist = src.length_m - from.offset_m;
    let mut dist: HashMap<usize, f64> = HashMap::new();
    let mut pred: HashMap<usize, ArcId> = HashMap::new();
    let mut settled: HashMap<usize, bool> = HashMap::new();
    let mut heap = BinaryHeap::new();
    dist.insert(src.to_vertex(), start_dist);
    heap.push(QueueItem { dist: start_dist, vertex: src.to_vertex() });

    let mut wanted: Vec<usize> = pending.iter().map(|&i| net.arc(targets[i].arc).from_vertex()).collect();
    wanted.sort_unstable();
    wanted.dedup();
    let mut remaining = wanted.len();

    while let Some(QueueItem { dist: d, vertex }) = heap.pop() {
        if d > limit_m {
            break;
        }
        if settled.insert(vertex, true).is_some() {
            continue;
        }
        if wanted.binary_search(&vertex).is_ok() {
            remaining -= 1;
            if remaining == 0 {
                break;
            }
        }
        for &a in net.outgoing(vertex) {
            let arc = net.arc(a);
            let nd = d + arc.length_m;
            let v = arc.to_vertex();
            if nd <= limit_m && dist.get(&v).is_none_or(|&old| nd < old) {
                dist.insert(v, nd);
                pred.insert(v, a);
                heap.push(QueueItem { dist: nd, vertex: v });
            }
        }
    }

    for i in pending {
        let t = &targets[i];
        let v = net.arc(t.arc).from_vertex();
        if !settled.contains_key(&v) {
            continue;
        }
        let total = dist[&v] + t.offset_m;
        if total > limit_m {
            continue;
        }
        let mut chain = vec![t.arc];
        let mut cur = v;
        while cur != src.to_vertex() {
            let a = pred[&cur];
            chain.push(a);
            cur = net.arc(a).from_vertex();
        }
        chain.push(from.arc);
        chain.reverse();
        out[i] = Some(Route { distance_m: total, arcs: chain });
    }
    out
}

pub fn shortest_route(net: &RoadNetwork, from: &Anchor, to: &Anchor) -> Result<Route> {
    routes_from(net, from, std::slice::from_ref(to), f64::INFINITY)
        .pop()
        .flatten()
        .ok_or(Error::Unreachable)
}

/// Network distance between two anchors, honouring arc direction.
pub fn route_distance(net: &RoadNetwork, from: &Anchor, to: &Anchor) -> Result<f64> {
    shortest_route(net, from, to).map(|r| r.distance_m)
}
