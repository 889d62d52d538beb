//! OSM road graph: nodes, tagged ways, directed arcs split at junctions,
//! a spatial index over arc geometry and shortest-path queries.

mod index;
mod osm;
pub mod overpass;
mod routing;
mod tags;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

pub use index::Candidate;
pub use osm::{parse_osm, OsmFormat, OsmLoad};
pub(crate) use routing::routes_from;
pub use routing::{route_distance, shortest_route, Anchor, Route};
pub use tags::{Cycleway, CyclewayKind, MaxSpeed, SpeedUnit, WayTags};

use crate::error::{Error, Result};
use crate::geo::{haversine_distance, GeoPoint};
use index::SpatialIndex;

pub type Tags = BTreeMap<String, String>;

#[derive(Debug, Clone, PartialEq)]
pub struct RoadNode {
    pub node_id: i64,
    pub point: GeoPoint,
    pub is_traffic_signal: bool,
    pub tags: Tags,
}

/// Traversal restriction of a way relative to its node order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Oneway {
    No,
    Forward,
    Backward,
}

impl Oneway {
    pub fn from_tags(tags: &Tags) -> Oneway {
        if tags.get("oneway:bicycle").map(String::as_str) == Some("no") {
            return Oneway::No;
        }
        match tags.get("oneway").map(String::as_str) {
            Some("yes" | "true" | "1") => Oneway::Forward,
            Some("-1" | "reverse") => Oneway::Backward,
            Some("no" | "false" | "0") => Oneway::No,
            _ => match tags.get("junction").map(String::as_str) {
                Some("roundabout" | "circular") => Oneway::Forward,
                _ => Oneway::No,
            },
        }
    }

    pub fn is_oneway(&self) -> bool {
        *self != Oneway::No
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoadWay {
    pub way_id: i64,
    pub node_ids: Vec<i64>,
    pub raw_tags: Tags,
    pub tags: WayTags,
    pub length_m: f64,
    pub oneway: Oneway,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ArcId(pub usize);

/// A directed, traversable piece of a way between two graph vertices.
#[derive(Debug, Clone)]
pub struct RoadArc {
    pub id: ArcId,
    pub way_id: i64,
    /// True when the arc runs in the way's node order.
    pub forward: bool,
    /// Node indices in travel order.
    nodes: Vec<usize>,
    /// Distance from the arc start to each node.
    cumulative: Vec<f64>,
    pub length_m: f64,
}

impl RoadArc {
    pub fn from_vertex(&self) -> usize {
        self.nodes[0]
    }

    pub fn to_vertex(&self) -> usize {
        *self.nodes.last().expect("arc has at least two nodes")
    }

    pub fn node_indices(&self) -> &[usize] {
        &self.nodes
    }

    pub fn cumulative(&self) -> &[f64] {
        &self.cumulative
    }

    /// Index of the segment an anchor at `offset` starts from.
    pub(crate) fn segment_starting_at(&self, offset: f64) -> usize {
        let last = self.nodes.len() - 2;
        self.cumulative.partition_point(|&c| c <= offset).saturating_sub(1).min(last)
    }

    /// Index of the node closing the segment an anchor at `offset` ends in.
    pub(crate) fn node_closing(&self, offset: f64) -> usize {
        self.cumulative.partition_point(|&c| c < offset).clamp(1, self.nodes.len() - 1)
    }
}

/// Which traffic-signal nodes are ignored as non-motorised crossings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalFilter {
    /// `(key, value)` rules; a `None` value matches any value of the key.
    pub exclude: Vec<(String, Option<String>)>,
}

impl Default for SignalFilter {
    fn default() -> Self {
        let rule = |k: &str, v: Option<&str>| (k.to_string(), v.map(str::to_string));
        SignalFilter {
            exclude: vec![
                rule("crossing", None),
                rule("traffic_signals", Some("crossing")),
                rule("traffic_signals", Some("pedestrian_crossing")),
                rule("traffic_signals", Some("cycle_crossing")),
                rule("traffic_signals", Some("bicycle_crossing")),
            ],
        }
    }
}

impl SignalFilter {
    pub fn is_signal(&self, tags: &Tags) -> bool {
        tags.get("highway").map(String::as_str) == Some("traffic_signals")
            && !self.exclude.iter().any(|(k, v)| match (tags.get(k), v) {
                (Some(_), None) => true,
                (Some(actual), Some(wanted)) => actual == wanted,
                _ => false,
            })
    }
}

/// Collects raw nodes and ways, then builds an immutable [`RoadNetwork`].
#[derive(Debug, Default, Clone)]
pub struct NetworkBuilder {
    nodes: BTreeMap<i64, (GeoPoint, Tags)>,
    ways: BTreeMap<i64, (Vec<i64>, Tags)>,
    signal_filter: SignalFilter,
}

impl NetworkBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn signal_filter(mut self, filter: SignalFilter) -> Self {
        self.signal_filter = filter;
        self
    }

    pub fn add_node(&mut self, node_id: i64, point: GeoPoint, tags: Tags) -> &mut Self {
        self.nodes.insert(node_id, (point, tags));
        self
    }

    pub fn add_way(&mut self, way_id: i64, node_ids: Vec<i64>, tags: Tags) -> &mut Self {
        self.ways.insert(way_id, (node_ids, tags));
        self
    }

    /// Build the graph. Ways without a `highway` tag are ignored; ways with
    /// dangling node references or no length are skipped and reported.
    pub fn build(self) -> (RoadNetwork, Vec<Error>) {
        let mut warnings = Vec::new();
        let mut ways: Vec<(i64, Vec<i64>, Tags)> = Vec::new();
        'ways: for (way_id, (refs, tags)) in self.ways {
            if !tags.contains_key("highway") {
                continue;
            }
            for &r in &refs {
                if !self.nodes.contains_key(&r) {
                    warnings.push(Error::DanglingNodeRef { way_id, node_id: r });
                    continue 'ways;
                }
            }
            let mut ids = refs;
            ids.dedup();
            if ids.len() < 2 {
                warnings.push(Error::MalformedOsm(format!("way {way_id} has fewer than two distinct nodes")));
                continue;
            }
            ways.push((way_id, ids, tags));
        }

        let used: BTreeSet<i64> = ways.iter().flat_map(|(_, ids, _)| ids.iter().copied()).collect();
        let mut nodes = Vec::with_capacity(used.len());
        let mut node_index = HashMap::with_capacity(used.len());
        for id in used {
            let (point, tags) = self.nodes[&id].clone();
            node_index.insert(id, nodes.len());
            nodes.push(RoadNode { node_id: id, point, is_traffic_signal: self.signal_filter.is_signal(&tags), tags });
        }

        let mut usage = vec![0usize; nodes.len()];
        for (_, ids, _) in &ways {
            for id in ids {
                usage[node_index[id]] += 1;
            }
        }

        let mut net = RoadNetwork {
            node_ways: vec![Vec::new(); nodes.len()],
            outgoing: vec![Vec::new(); nodes.len()],
            neighbours: vec![BTreeSet::new(); nodes.len()],
            nodes,
            node_index,
            ways: Vec::new(),
            way_index: HashMap::new(),
            arcs: Vec::new(),
            segment_ways: HashMap::new(),
            arc_by_vertices: HashMap::new(),
            index: SpatialIndex::default(),
            signal_filter: self.signal_filter,
        };

        for (way_id, ids, raw_tags) in ways {
            let idx: Vec<usize> = ids.iter().map(|id| net.node_index[id]).collect();
            let length_m: f64 = idx.windows(2).map(|w| haversine_distance(&net.nodes[w[0]].point, &net.nodes[w[1]].point)).fold(0.0, |a, b| a + b);
            if length_m <= 0.0 {
                warnings.push(Error::MalformedOsm(format!("way {way_id} has zero length")));
                continue;
            }
            let way_pos = net.ways.len();
            for w in ids.windows(2) {
                let key = (w[0].min(w[1]), w[0].max(w[1]));
                net.segment_ways.entry(key).or_default().push(way_id);
                let (a, b) = (net.node_index[&w[0]], net.node_index[&w[1]]);
                net.neighbours[a].insert(b);
                net.neighbours[b].insert(a);
            }
            for &i in &idx {
                if net.node_ways[i].last() != Some(&way_pos) {
                    net.node_ways[i].push(way_pos);
                }
            }
            let oneway = Oneway::from_tags(&raw_tags);
            // split at junctions (shared or repeated nodes) and way ends
            let mut cuts = vec![0];
            for (p, &i) in idx.iter().enumerate().take(idx.len() - 1).skip(1) {
                if usage[i] >= 2 {
                    cuts.push(p);
                }
            }
            cuts.push(idx.len() - 1);
            for c in cuts.windows(2) {
                let piece = &idx[c[0]..=c[1]];
                if oneway != Oneway::Backward {
                    net.push_arc(way_id, true, piece.to_vec());
                }
                if oneway != Oneway::Forward {
                    net.push_arc(way_id, false, piece.iter().rev().copied().collect());
                }
            }
            net.way_index.insert(way_id, way_pos);
            net.ways.push(RoadWay { way_id, node_ids: ids, tags: WayTags::from_tags(&raw_tags), raw_tags, length_m, oneway });
        }
        net.index = SpatialIndex::build(&net);
        (net, warnings)
    }
}

/// Immutable routable road graph.
#[derive(Debug, Clone)]
pub struct RoadNetwork {
    nodes: Vec<RoadNode>,
    node_index: HashMap<i64, usize>,
    ways: Vec<RoadWay>,
    way_index: HashMap<i64, usize>,
    arcs: Vec<RoadArc>,
    outgoing: Vec<Vec<ArcId>>,
    node_ways: Vec<Vec<usize>>,
    neighbours: Vec<BTreeSet<usize>>,
    segment_ways: HashMap<(i64, i64), Vec<i64>>,
    arc_by_vertices: HashMap<(usize, usize), Vec<ArcId>>,
    index: SpatialIndex,
    signal_filter: SignalFilter,
}

impl RoadNetwork {
    fn push_arc(&mut self, way_id: i64, forward: bool, nodes: Vec<usize>) {
        let mut cumulative = Vec::with_capacity(nodes.len());
        let mut acc = 0.0;
        cumulative.push(0.0);
        for w in nodes.windows(2) {
            acc += haversine_distance(&self.nodes[w[0]].point, &self.nodes[w[1]].point);
            cumulative.push(acc);
        }
        let id = ArcId(self.arcs.len());
        self.outgoing[nodes[0]].push(id);
        self.arc_by_vertices.entry((nodes[0], *nodes.last().unwrap())).or_default().push(id);
        self.arcs.push(RoadArc { id, way_id, forward, nodes, cumulative, length_m: acc });
    }

    pub fn nodes(&self) -> &[RoadNode] {
        &self.nodes
    }

    pub fn ways(&self) -> &[RoadWay] {
        &self.ways
    }

    pub fn arcs(&self) -> &[RoadArc] {
        &self.arcs
    }

    pub fn arc(&self, id: ArcId) -> &RoadArc {
        &self.arcs[id.0]
    }

    pub fn node(&self, node_id: i64) -> Option<&RoadNode> {
        self.node_index.get(&node_id).map(|&i| &self.nodes[i])
    }

    pub fn node_at(&self, index: usize) -> &RoadNode {
        &self.nodes[index]
    }

    pub fn way(&self, way_id: i64) -> Option<&RoadWay> {
        self.way_index.get(&way_id).map(|&i| &self.ways[i])
    }

    pub fn signal_filter(&self) -> &SignalFilter {
        &self.signal_filter
    }

    pub(crate) fn outgoing(&self, vertex: usize) -> &[ArcId] {
        &self.outgoing[vertex]
    }

    /// Number of distinct neighbouring nodes; 3 or more marks an intersection.
    pub fn degree(&self, node_id: i64) -> usize {
        self.node_index.get(&node_id).map_or(0, |&i| self.neighbours[i].len())
    }

    /// Point at `offset_m` along an arc.
    pub fn point_on_arc(&self, arc: ArcId, offset_m: f64) -> GeoPoint {
        let a = self.arc(arc);
        let s = a.segment_starting_at(offset_m);
        let (c0, c1) = (a.cumulative[s], a.cumulative[s + 1]);
        let frac = if c1 > c0 { (offset_m - c0) / (c1 - c0) } else { 0.0 };
        self.nodes[a.nodes[s]].point.lerp(&self.nodes[a.nodes[s + 1]].point, frac)
    }

    /// Ways whose node list contains `node_id`, in way-id order.
    pub fn node_to_ways(&self, node_id: i64) -> Result<Vec<i64>> {
        let i = self.node_index.get(&node_id).ok_or(Error::UnknownNode(node_id))?;
        Ok(self.node_ways[*i].iter().map(|&w| self.ways[w].way_id).collect())
    }

    /// Ways that contain `a` and `b` as adjacent nodes, smallest id first.
    pub fn ways_with_segment(&self, a: i64, b: i64) -> &[i64] {
        self.segment_ways.get(&(a.min(b), a.max(b))).map_or(&[], Vec::as_slice)
    }

    /// Arcs running from vertex `from` to vertex `to` (OSM node ids).
    pub fn arcs_between(&self, from: i64, to: i64) -> Vec<ArcId> {
        match (self.node_index.get(&from), self.node_index.get(&to)) {
            (Some(&a), Some(&b)) => self.arc_by_vertices.get(&(a, b)).cloned().unwrap_or_default(),
            _ => Vec::new(),
        }
    }

    /// Up to `k` arcs within `radius_m` of `p`, nearest first; ties are
    /// broken by way id, then arc id.
    pub fn nearest_candidates(&self, p: &GeoPoint, radius_m: f64, k: usize) -> Vec<Candidate> {
        self.index.nearest_candidates(self, p, radius_m, k)
    }

    /// Serialize as an Overpass-style JSON document that [`parse_osm`]
    /// reads back into an identical network.
    pub fn to_overpass_json(&self) -> serde_json::Value {
        let mut elements = Vec::new();
        for n in &self.nodes {
            let mut e = serde_json::json!({"type": "node", "id": n.node_id, "lat": n.point.lat(), "lon": n.point.lon()});
            if !n.tags.is_empty() {
                e["tags"] = serde_json::to_value(&n.tags).expect("string map");
            }
            elements.push(e);
        }
        for w in &self.ways {
            elements.push(serde_json::json!({"type": "way", "id": w.way_id, "nodes": w.node_ids, "tags": w.raw_tags}));
        }
        serde_json::json!({ "version": 0.6, "generator": "cycletrail", "elements": elements })
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub fn tags(pairs: &[(&str, &str)]) -> Tags {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    /// Nodes along the equator every `spacing` degrees of longitude.
    pub fn line_network(n: usize, spacing: f64, way_tags: &[(&str, &str)]) -> RoadNetwork {
        let mut b = NetworkBuilder::new();
        for i in 0..n {
            b.add_node(i as i64 + 1, GeoPoint::new(0.0, i as f64 * spacing).unwrap(), Tags::new());
        }
        b.add_way(100, (1..=n as i64).collect(), tags(way_tags));
        b.build().0
    }

    #[test]
    fn two_node_way_gives_arc_pair() {
        let net = line_network(2, 0.001, &[("highway", "residential")]);
        assert_eq!(net.ways().len(), 1);
        assert_eq!(net.arcs().len(), 2);
        assert!(net.arcs()[0].forward && !net.arcs()[1].forward);
        let w = &net.ways()[0];
        let expected = haversine_distance(&net.nodes()[0].point, &net.nodes()[1].point);
        assert!((w.length_m - expected).abs() <= 1e-6 * expected);
    }

    #[test]
    fn oneway_gives_single_direction() {
        let net = line_network(4, 0.001, &[("highway", "primary"), ("oneway", "yes")]);
        assert_eq!(net.arcs().len(), 1);
        assert!(net.arcs()[0].forward);
        let rev = line_network(4, 0.001, &[("highway", "primary"), ("oneway", "-1")]);
        assert_eq!(rev.arcs().len(), 1);
        assert!(!rev.arcs()[0].forward);
        let contra = line_network(4, 0.001, &[("highway", "primary"), ("oneway", "yes"), ("oneway:bicycle", "no")]);
        assert_eq!(contra.arcs().len(), 2);
    }

    #[test]
    fn ways_split_at_shared_nodes() {
        let mut b = NetworkBuilder::new();
        for (id, lat, lon) in [(1, 0.0, 0.0), (2, 0.0, 0.001), (3, 0.0, 0.002), (4, 0.001, 0.001), (5, -0.001, 0.001)] {
            b.add_node(id, GeoPoint::new(lat, lon).unwrap(), Tags::new());
        }
        b.add_way(10, vec![1, 2, 3], tags(&[("highway", "residential")]));
        b.add_way(11, vec![4, 2], tags(&[("highway", "residential")]));
        b.add_way(12, vec![2, 5], tags(&[("highway", "service")]));
        b.add_way(13, vec![4, 5], tags(&[("building", "yes")]));
        let (net, warnings) = b.build();
        assert!(warnings.is_empty());
        assert_eq!(net.ways().len(), 3);
        // way 10 split at node 2 -> 2 pieces x 2 directions, plus 2 + 2
        assert_eq!(net.arcs().len(), 8);
        assert_eq!(net.node_to_ways(2).unwrap(), vec![10, 11, 12]);
        assert_eq!(net.node_to_ways(1).unwrap(), vec![10]);
        assert!(matches!(net.node_to_ways(99), Err(Error::UnknownNode(99))));
        assert_eq!(net.degree(2), 4);
        assert_eq!(net.degree(1), 1);
        // arcs partition way geometry
        let len10: f64 = net.arcs().iter().filter(|a| a.way_id == 10 && a.forward).map(|a| a.length_m).sum();
        assert!((len10 - net.way(10).unwrap().length_m).abs() < 1e-9);
    }

    #[test]
    fn dangling_reference_skips_way() {
        let mut b = NetworkBuilder::new();
        b.add_node(1, GeoPoint::new(0.0, 0.0).unwrap(), Tags::new());
        b.add_node(2, GeoPoint::new(0.0, 0.001).unwrap(), Tags::new());
        b.add_way(10, vec![1, 2], tags(&[("highway", "residential")]));
        b.add_way(11, vec![2, 77], tags(&[("highway", "residential")]));
        let (net, warnings) = b.build();
        assert_eq!(net.ways().len(), 1);
        assert!(matches!(warnings[..], [Error::DanglingNodeRef { way_id: 11, node_id: 77 }]));
    }

    #[test]
    fn signal_filter_excludes_crossings() {
        let f = SignalFilter::default();
        assert!(f.is_signal(&tags(&[("highway", "traffic_signals")])));
        assert!(!f.is_signal(&tags(&[("highway", "traffic_signals"), ("crossing", "traffic_signals")])));
        assert!(!f.is_signal(&tags(&[("highway", "traffic_signals"), ("traffic_signals", "crossing")])));
        assert!(f.is_signal(&tags(&[("highway", "traffic_signals"), ("traffic_signals", "signal")])));
        assert!(!f.is_signal(&tags(&[("highway", "crossing")])));
    }

    #[test]
    fn point_on_arc_interpolates() {
        let net = line_network(3, 0.001, &[("highway", "residential")]);
        let fwd = net.arcs().iter().find(|a| a.forward).unwrap();
        let half = fwd.length_m / 2.0;
        let p = net.point_on_arc(fwd.id, half);
        assert!((p.lon() - 0.001).abs() < 1e-9);
        let end = net.point_on_arc(fwd.id, fwd.length_m);
        assert!((end.lon() - 0.002).abs() < 1e-12);
    }
}
