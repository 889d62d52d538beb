//! Study-area polygon with even-odd containment.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::GeoPoint;

const EDGE_EPS: f64 = 1e-12;

/// A set of closed rings given as `[lon, lat]` pairs. Containment uses the
/// even-odd rule over all rings, so inner rings act as holes. Points on an
/// edge or vertex count as inside.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<[f64; 2]>>", into = "Vec<Vec<[f64; 2]>>")]
pub struct Boundary {
    rings: Vec<Vec<[f64; 2]>>,
}

impl TryFrom<Vec<Vec<[f64; 2]>>> for Boundary {
    type Error = Error;
    fn try_from(rings: Vec<Vec<[f64; 2]>>) -> Result<Self> {
        Boundary::new(rings)
    }
}

impl From<Boundary> for Vec<Vec<[f64; 2]>> {
    fn from(b: Boundary) -> Self {
        b.rings
    }
}

impl Boundary {
    pub fn new(rings: Vec<Vec<[f64; 2]>>) -> Result<Self> {
        if rings.is_empty() {
            return Err(Error::InvalidConfig("boundary has no rings".into()));
        }
        for (i, ring) in rings.iter().enumerate() {
            if ring.len() < 4 {
                return Err(Error::InvalidConfig(format!("boundary ring {i} needs at least 4 positions")));
            }
            if ring.first() != ring.last() {
                return Err(Error::InvalidConfig(format!("boundary ring {i} is not closed")));
            }
            if ring.iter().flatten().any(|v| !v.is_finite()) {
                return Err(Error::InvalidConfig(format!("boundary ring {i} has non-finite coordinates")));
            }
            if self_intersects(ring) {
                return Err(Error::InvalidConfig(format!("boundary ring {i} self-intersects")));
            }
        }
        Ok(Boundary { rings })
    }

    /// Axis-aligned rectangle, handy for tests and configs.
    pub fn rectangle(min_lon: f64, min_lat: f64, max_lon: f64, max_lat: f64) -> Result<Self> {
        Boundary::new(vec![vec![
            [min_lon, min_lat],
            [max_lon, min_lat],
            [max_lon, max_lat],
            [min_lon, max_lat],
            [min_lon, min_lat],
        ]])
    }

    pub fn contains(&self, p: &GeoPoint) -> bool {
        let (x, y) = (p.lon(), p.lat());
        let mut inside = false;
        for ring in &self.rings {
            for w in ring.windows(2) {
                let (a, b) = (w[0], w[1]);
                if on_segment(x, y, a, b) {
                    return true;
                }
                if (a[1] > y) != (b[1] > y) {
                    let cross_x = a[0] + (y - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
                    if x < cross_x {
                        inside = !inside;
                    }
                }
            }
        }
        inside
    }
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn on_segment(x: f64, y: f64, a: [f64; 2], b: [f64; 2]) -> bool {
    let p = [x, y];
    cross(a, b, p).abs() <= EDGE_EPS
        && x >= a[0].min(b[0]) - EDGE_EPS
        && x <= a[0].max(b[0]) + EDGE_EPS
        && y >= a[1].min(b[1]) - EDGE_EPS
        && y <= a[1].max(b[1]) + EDGE_EPS
}

fn segments_cross(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> bool {
    let d1 = cross(c, d, a);
    let d2 = cross(c, d, b);
    let d3 = cross(a, b, c);
    let d4 = cross(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    on_segment(a[0], a[1], c, d) || on_segment(b[0], b[1], c, d) || on_segment(c[0], c[1], a, b) || on_segment(d[0], d[1], a, b)
}

fn self_intersects(ring: &[[f64; 2]]) -> bool {
    let n = ring.len() - 1;
    for i in 0..n {
        for j in i + 1..n {
            // adjacent edges share a vertex
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            if segments_cross(ring[i], ring[i + 1], ring[j], ring[j + 1]) {
                return true;
            }
        }
    }
    false
}
