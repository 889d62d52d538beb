//! Route-difference error rate of a matched route against a ground truth.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::{fsum, haversine_distance};
use crate::matcher::MatchedTrip;
use crate::network::RoadNetwork;

/// One node-to-node traversal of a way.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EdgeKey {
    pub way_id: i64,
    pub from_node: i64,
    pub to_node: i64,
}

/// Multiset of traversed way segments with their lengths.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RouteEdgeSet {
    /// Length of every traversal of each key.
    entries: BTreeMap<EdgeKey, Vec<f64>>,
    directed: bool,
}

impl RouteEdgeSet {
    pub fn new(directed: bool) -> Self {
        RouteEdgeSet { entries: BTreeMap::new(), directed }
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    pub fn insert(&mut self, mut key: EdgeKey, length_m: f64) {
        if !self.directed && key.from_node > key.to_node {
            std::mem::swap(&mut key.from_node, &mut key.to_node);
        }
        self.entries.entry(key).or_default().push(length_m);
    }

    /// Keys with their traversal lengths.
    pub fn iter(&self) -> impl Iterator<Item = (&EdgeKey, &[f64])> {
        self.entries.iter().map(|(k, v)| (k, v.as_slice()))
    }

    /// Total length counting repeats.
    pub fn length_m(&self) -> f64 {
        fsum(self.entries.values().flatten().copied())
    }

    pub fn len(&self) -> usize {
        self.entries.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Build from an ordered node path. Pairs that are not adjacent on any
    /// way are expanded through the arc joining them, so a path may list
    /// only junctions.
    pub fn from_node_path(net: &RoadNetwork, nodes: &[i64], directed: bool) -> Result<Self> {
        let mut set = RouteEdgeSet::new(directed);
        for (key, len) in segments(net, nodes)? {
            set.insert(key, len);
        }
        Ok(set)
    }

    /// Build from the legs of a matched trip. Consecutive legs share the
    /// segment around their common point, so each leg's node list is joined
    /// to the path at its largest overlap. The first and last segments only
    /// count the part between the end points and their inner node.
    pub fn from_matched(net: &RoadNetwork, trip: &MatchedTrip, directed: bool) -> Result<Self> {
        let mut path: Vec<i64> = Vec::new();
        for leg in &trip.legs {
            let seq = &leg.node_sequence;
            let k = (0..=seq.len().min(path.len())).rev().find(|&k| path.ends_with(&seq[..k])).unwrap_or(0);
            path.extend_from_slice(&seq[k..]);
        }
        let mut segs = segments(net, &path)?;
        if let (Some(first), Some(last)) = (trip.points.first(), trip.points.last()) {
            let n = segs.len();
            let point = |id: i64| net.node(id).map(|n| n.point);
            if n == 1 {
                segs[0].1 = haversine_distance(&first.snapped, &last.snapped);
            } else if n > 1 {
                if let Some(p) = point(segs[0].0.to_node) {
                    segs[0].1 = haversine_distance(&first.snapped, &p);
                }
                if let Some(p) = point(segs[n - 1].0.from_node) {
                    segs[n - 1].1 = haversine_distance(&p, &last.snapped);
                }
            }
        }
        let mut set = RouteEdgeSet::new(directed);
        for (key, len) in segs {
            if len > 0.0 {
                set.insert(key, len);
            }
        }
        Ok(set)
    }
}

/// Way segments along a node path with their full lengths. Pairs that are
/// not adjacent on any way are expanded through the arc joining them.
fn segments(net: &RoadNetwork, nodes: &[i64]) -> Result<Vec<(EdgeKey, f64)>> {
    let mut out = Vec::new();
    let mut push = |a: i64, b: i64| -> Result<()> {
        let unknown = || Error::UnknownArc { from_node: a, to_node: b };
        let way_id = *net.ways_with_segment(a, b).first().ok_or_else(unknown)?;
        let (pa, pb) = (net.node(a).ok_or_else(unknown)?, net.node(b).ok_or_else(unknown)?);
        out.push((EdgeKey { way_id, from_node: a, to_node: b }, haversine_distance(&pa.point, &pb.point)));
        Ok(())
    };
    for w in nodes.windows(2) {
        let (a, b) = (w[0], w[1]);
        if a == b {
            continue;
        }
        if net.ways_with_segment(a, b).is_empty() {
            for (x, y) in expand_via_arc(net, a, b)? {
                push(x, y)?;
            }
        } else {
            push(a, b)?;
        }
    }
    Ok(out)
}

/// Node pairs along the shortest arc from `a` to `b` (or from `b` to `a`,
/// reversed, for a one-way street walked against its direction).
fn expand_via_arc(net: &RoadNetwork, a: i64, b: i64) -> Result<Vec<(i64, i64)>> {
    let pick = |from: i64, to: i64| {
        net.arcs_between(from, to)
            .into_iter()
            .min_by(|x, y| net.arc(*x).length_m.total_cmp(&net.arc(*y).length_m).then(x.cmp(y)))
    };
    let (arc, reversed) = match (pick(a, b), pick(b, a)) {
        (Some(x), _) => (x, false),
        (None, Some(x)) => (x, true),
        (None, None) => return Err(Error::UnknownArc { from_node: a, to_node: b }),
    };
    let mut ids: Vec<i64> = net.arc(arc).node_indices().iter().map(|&i| net.node_at(i).node_id).collect();
    if reversed {
        ids.reverse();
    }
    Ok(ids.windows(2).map(|w| (w[0], w[1])).collect())
}

/// `(d_plus, d_minus)`: length of matched entries missing from the truth,
/// and of truth entries missing from the match, as multisets.
pub fn route_diff(truth: &RouteEdgeSet, matched: &RouteEdgeSet) -> (f64, f64) {
    // Unpaired traversals of a key are its shortest ones.
    fn excess(a: &RouteEdgeSet, b: &RouteEdgeSet) -> f64 {
        fsum(a.entries.iter()
            .map(|(k, lens)| {
                let paired = b.entries.get(k).map_or(0, Vec::len);
                let mut lens = lens.clone();
                lens.sort_by(f64::total_cmp);
                fsum(lens.iter().take(lens.len().saturating_sub(paired)).copied())
            }))
    }
    (excess(matched, truth), excess(truth, matched))
}

/// `(d_minus + d_plus) / d0 * 100`.
pub fn error_rate(d0_m: f64, d_plus_m: f64, d_minus_m: f64) -> Result<f64> {
    if !(d0_m > 0.0) {
        return Err(Error::ZeroTruthLength);
    }
    Ok((d_minus_m + d_plus_m) / d0_m * 100.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub id: String,
    pub d0_m: f64,
    pub d_plus_m: f64,
    pub d_minus_m: f64,
    pub error_rate_pct: f64,
}

impl EvaluationReport {
    pub fn from_lengths(id: impl Into<String>, d0_m: f64, d_plus_m: f64, d_minus_m: f64) -> Result<Self> {
        Ok(EvaluationReport {
            id: id.into(),
            d0_m,
            d_plus_m,
            d_minus_m,
            error_rate_pct: error_rate(d0_m, d_plus_m, d_minus_m)?,
        })
    }

    /// Pooled row: the error rate of the summed lengths.
    pub fn total(rows: &[EvaluationReport]) -> Result<Self> {
        let sum = |f: fn(&EvaluationReport) -> f64| fsum(rows.iter().map(f));
        EvaluationReport::from_lengths("Total", sum(|r| r.d0_m), sum(|r| r.d_plus_m), sum(|r| r.d_minus_m))
    }
}

pub fn evaluate_against_truth(net: &RoadNetwork, matched: &MatchedTrip, truth: &RouteEdgeSet) -> Result<EvaluationReport> {
    let m = RouteEdgeSet::from_matched(net, matched, truth.is_directed())?;
    let (d_plus, d_minus) = route_diff(truth, &m);
    EvaluationReport::from_lengths(matched.key(), truth.length_m(), d_plus, d_minus)
}

/// Parse a truth file: `<id> <node> <node> ...` per line, `#` comments.
/// Later lines for the same id replace earlier ones.
pub fn parse_truth(text: &str) -> Result<BTreeMap<String, Vec<i64>>> {
    let mut out = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        let mut fields = line.split_whitespace();
        let Some(id) = fields.next() else { continue };
        let nodes = fields
            .map(|f| f.parse::<i64>().map_err(|_| Error::ParseError(format!("truth line {}: bad node id '{f}'", lineno + 1))))
            .collect::<Result<Vec<_>>>()?;
        if nodes.len() < 2 {
            return Err(Error::ParseError(format!("truth line {}: need at least two nodes", lineno + 1)));
        }
        out.insert(id.to_string(), nodes);
    }
    Ok(out)
}

/// Write the report table with a trailing Total row, lengths and rates to
/// two decimals.
pub fn write_report<W: Write>(rows: &[EvaluationReport], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["ID", "length_m", "d_plus_m", "d_minus_m", "error_rate_pct"])?;
    let total = if rows.is_empty() { None } else { Some(EvaluationReport::total(rows)?) };
    for r in rows.iter().chain(total.as_ref()) {
        w.write_record([
            r.id.clone(),
            format!("{:.2}", r.d0_m),
            format!("{:.2}", r.d_plus_m),
            format!("{:.2}", r.d_minus_m),
            format!("{:.2}", r.error_rate_pct),
        ])?;
    }
    w.flush()?;
    Ok(())
}
