//! Geodesic primitives on a spherical Earth.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// IUGG mean Earth radius in meters.
pub const EARTH_RADIUS_M: f64 = 6_371_008.8;

/// A WGS84 coordinate in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPoint", into = "RawPoint")]
pub struct GeoPoint {
    lat: f64,
    lon: f64,
}

#[derive(Serialize, Deserialize)]
struct RawPoint {
    lat: f64,
    lon: f64,
}

impl TryFrom<RawPoint> for GeoPoint {
    type Error = Error;
    fn try_from(raw: RawPoint) -> Result<Self> {
        GeoPoint::new(raw.lat, raw.lon)
    }
}

impl From<GeoPoint> for RawPoint {
    fn from(p: GeoPoint) -> Self {
        RawPoint { lat: p.lat, lon: p.lon }
    }
}

impl GeoPoint {
    pub fn new(lat: f64, lon: f64) -> Result<Self> {
        if !lat.is_finite() || !lon.is_finite() || !(-90.0..=90.0).contains(&lat) || !(-180.0..=180.0).contains(&lon) {
            return Err(Error::InvalidCoordinate { lat, lon });
        }
        Ok(GeoPoint { lat, lon })
    }

    pub fn lat(&self) -> f64 {
        self.lat
    }

    pub fn lon(&self) -> f64 {
        self.lon
    }

    /// Linear interpolation in lat/lon space; `frac` is clamped to [0, 1].
    pub fn lerp(&self, other: &GeoPoint, frac: f64) -> GeoPoint {
        let f = frac.clamp(0.0, 1.0);
        GeoPoint {
            lat: self.lat + (other.lat - self.lat) * f,
            lon: self.lon + (other.lon - self.lon) * f,
        }
    }

    /// Point reached by moving `east_m`/`north_m` meters in a local tangent plane.
    pub fn offset_m(&self, east_m: f64, north_m: f64) -> Result<GeoPoint> {
        let dlat = (north_m / EARTH_RADIUS_M).to_degrees();
        let dlon = (east_m / (EARTH_RADIUS_M * self.lat.to_radians().cos())).to_degrees();
        GeoPoint::new(self.lat + dlat, self.lon + dlon)
    }
}

impl fmt::Display for GeoPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.lat, self.lon)
    }
}

/// Seconds since the Unix epoch (UTC), sub-second precision preserved.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Timestamp(f64);

impl Timestamp {
    pub fn from_epoch_seconds(secs: f64) -> Result<Self> {
        if secs.is_finite() {
            Ok(Timestamp(secs))
        } else {
            Err(Error::InvalidTimestamp(secs))
        }
    }

    pub fn epoch_seconds(&self) -> f64 {
        self.0
    }

    /// Signed difference `self - earlier` in seconds.
    pub fn seconds_since(&self, earlier: Timestamp) -> f64 {
        self.0 - earlier.0
    }
}

impl TryFrom<f64> for Timestamp {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        Timestamp::from_epoch_seconds(v)
    }
}

impl From<Timestamp> for f64 {
    fn from(t: Timestamp) -> f64 {
        t.0
    }
}

impl Eq for Timestamp {}

impl PartialOrd for Timestamp {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Timestamp {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Great-circle distance in meters.
/// Sum starting from +0.0 (`Iterator::sum` yields -0.0 when empty).
pub fn fsum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    values.into_iter().fold(0.0, |a, b| a + b)
}

pub fn haversine_distance(a: &GeoPoint, b: &GeoPoint) -> f64 {
    let (lat1, lat2) = (a.lat.to_radians(), b.lat.to_radians());
    let dlat = lat2 - lat1;
    let dlon = (b.lon - a.lon).to_radians();
    let h = (dlat / 2.0).sin().powi(2) + lat1.cos() * lat2.cos() * (dlon / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_M * h.sqrt().min(1.0).asin()
}

/// Speed in m/s between two timed points. `b` must be strictly later than `a`.
pub fn speed_between(a: (&GeoPoint, Timestamp), b: (&GeoPoint, Timestamp)) -> Result<f64> {
    let dt = b.1.seconds_since(a.1);
    if dt <= 0.0 {
        return Err(Error::NonPositiveInterval(dt));
    }
    Ok(haversine_distance(a.0, b.0) / dt)
}

/// Closest point on segment `a`-`b` to `p`, computed in an equirectangular
/// plane centred on `p`. Returns the projected point and the fraction along
/// the segment.
pub fn project_onto_segment(p: &GeoPoint, a: &GeoPoint, b: &GeoPoint) -> (GeoPoint, f64) {
    let kx = p.lat.to_radians().cos();
    let (ax, ay) = ((a.lon - p.lon) * kx, a.lat - p.lat);
    let (bx, by) = ((b.lon - p.lon) * kx, b.lat - p.lat);
    let (dx, dy) = (bx - ax, by - ay);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 { (-(ax * dx + ay * dy) / len2).clamp(0.0, 1.0) } else { 0.0 };
    (a.lerp(b, t), t)
}
