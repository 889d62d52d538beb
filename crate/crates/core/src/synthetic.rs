//! Synthetic grid networks and noisy 1 Hz traces with known routes, for
//! benchmarks and recovery tests.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::Result;
use crate::geo::{haversine_distance, GeoPoint, Timestamp};
use crate::network::{NetworkBuilder, RoadNetwork, Tags};
use crate::preprocess::{Trajectory, Waypoint};

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub rows: usize,
    pub cols: usize,
    pub spacing_m: f64,
    /// South-west corner.
    pub origin: GeoPoint,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { rows: 8, cols: 8, spacing_m: 100.0, origin: GeoPoint::new(51.5, -0.1).expect("valid") }
    }
}

impl GridSpec {
    pub fn node_id(&self, row: usize, col: usize) -> i64 {
        (row * self.cols + col) as i64 + 1
    }

    fn cell(&self, id: i64) -> (usize, usize) {
        let i = (id - 1) as usize;
        (i / self.cols, i % self.cols)
    }

    pub fn row_way(&self, row: usize) -> i64 {
        1000 + row as i64
    }

    pub fn col_way(&self, col: usize) -> i64 {
        2000 + col as i64
    }

    pub fn network(&self) -> Result<RoadNetwork> {
        let mut b = NetworkBuilder::new();
        for r in 0..self.rows {
            for c in 0..self.cols {
                let p = self.origin.offset_m(c as f64 * self.spacing_m, r as f64 * self.spacing_m)?;
                b.add_node(self.node_id(r, c), p, Tags::new());
            }
        }
        let residential: Tags = [("highway".to_string(), "residential".to_string())].into();
        for r in 0..self.rows {
            b.add_way(self.row_way(r), (0..self.cols).map(|c| self.node_id(r, c)).collect(), residential.clone());
        }
        for c in 0..self.cols {
            b.add_way(self.col_way(c), (0..self.rows).map(|r| self.node_id(r, c)).collect(), residential.clone());
        }
        Ok(b.build().0)
    }

    fn neighbours(&self, id: i64) -> Vec<i64> {
        let (r, c) = self.cell(id);
        let mut out = Vec::new();
        if r > 0 {
            out.push(self.node_id(r - 1, c));
        }
        if r + 1 < self.rows {
            out.push(self.node_id(r + 1, c));
        }
        if c > 0 {
            out.push(self.node_id(r, c - 1));
        }
        if c + 1 < self.cols {
            out.push(self.node_id(r, c + 1));
        }
        out
    }

    /// Self-avoiding walk of up to `blocks` grid edges from a random node.
    pub fn random_route<R: Rng>(&self, rng: &mut R, blocks: usize) -> Vec<i64> {
        let mut route = vec![self.node_id(rng.gen_range(0..self.rows), rng.gen_range(0..self.cols))];
        while route.len() <= blocks {
            let here = *route.last().expect("non-empty");
            let options: Vec<i64> = self.neighbours(here).into_iter().filter(|n| !route.contains(n)).collect();
            match options.choose(rng) {
                Some(&n) => route.push(n),
                None => break,
            }
        }
        route
    }
}

/// Positions every second along a node path at constant speed, ending on
/// the last node.
pub fn sample_route(net: &RoadNetwork, route: &[i64], speed_ms: f64, start: Timestamp, trip_id: &str) -> Result<Trajectory> {
    let pts: Vec<GeoPoint> = route.iter().filter_map(|id| net.node(*id)).map(|n| n.point).collect();
    let mut cum = vec![0.0];
    for w in pts.windows(2) {
        cum.push(cum.last().copied().unwrap_or(0.0) + haversine_distance(&w[0], &w[1]));
    }
    let total = cum.last().copied().unwrap_or(0.0);
    let steps = (total / speed_ms).ceil() as usize;
    let mut out = Vec::with_capacity(steps + 1);
    let mut seg = 0;
    for k in 0..=steps {
        let s = (k as f64 * speed_ms).min(total);
        while seg + 2 < cum.len() && cum[seg + 1] < s {
            seg += 1;
        }
        let len = cum[seg + 1] - cum[seg];
        let frac = if len > 0.0 { (s - cum[seg]) / len } else { 0.0 };
        out.push(Waypoint {
            point: pts[seg].lerp(&pts[seg + 1], frac),
            time: Timestamp::from_epoch_seconds(start.epoch_seconds() + k as f64)?,
            source_index: k,
        });
    }
    Ok(Trajectory::new(trip_id, out))
}

/// Add isotropic Gaussian position noise with standard deviation `sigma_m`.
pub fn add_noise<R: Rng>(t: &Trajectory, sigma_m: f64, rng: &mut R) -> Result<Trajectory> {
    let normal = Normal::new(0.0, sigma_m).map_err(|e| crate::Error::InvalidConfig(e.to_string()))?;
    let points = t
        .points
        .iter()
        .map(|w| {
            let (e, n) = (normal.sample(rng), normal.sample(rng));
            Ok(Waypoint { point: w.point.offset_m(e, n)?, ..*w })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Trajectory::new(t.trip_id.clone(), points))
}
