//! Typed view of the OSM way tags used for enrichment.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpeedUnit {
    Kmh,
    Mph,
}

impl SpeedUnit {
    pub fn as_str(&self) -> &'static str {
        match self {
            SpeedUnit::Kmh => "km/h",
            SpeedUnit::Mph => "mph",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaxSpeed {
    pub value: f64,
    pub unit: SpeedUnit,
}

impl MaxSpeed {
    /// Parse an OSM `maxspeed` value. A bare number is km/h.
    pub fn parse(raw: &str) -> Option<MaxSpeed> {
        let s = raw.trim().to_ascii_lowercase();
        let (num, unit) = if let Some(n) = s.strip_suffix("mph") {
            (n, SpeedUnit::Mph)
        } else if let Some(n) = s.strip_suffix("km/h").or_else(|| s.strip_suffix("kmh")).or_else(|| s.strip_suffix("kph")) {
            (n, SpeedUnit::Kmh)
        } else {
            (s.as_str(), SpeedUnit::Kmh)
        };
        let value: f64 = num.trim().parse().ok()?;
        (value.is_finite() && value > 0.0).then_some(MaxSpeed { value, unit })
    }
}

impl fmt::Display for MaxSpeed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.unit {
            SpeedUnit::Mph => write!(f, "{} mph", self.value),
            SpeedUnit::Kmh => write!(f, "{}", self.value),
        }
    }
}

/// Values of `cycleway:left/right/both`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cycleway {
    SharedLane,
    ShareBusway,
    Track,
    Lane,
    Separate,
    None,
    Other(String),
}

impl Cycleway {
    pub fn as_str(&self) -> &str {
        match self {
            Cycleway::SharedLane => "shared_lane",
            Cycleway::ShareBusway => "share_busway",
            Cycleway::Track => "track",
            Cycleway::Lane => "lane",
            Cycleway::Separate => "separate",
            Cycleway::None => "none",
            Cycleway::Other(s) => s,
        }
    }

    /// Infrastructure categories that can become an effective cycleway.
    pub fn infrastructure(&self) -> Option<CyclewayKind> {
        match self {
            Cycleway::SharedLane => Some(CyclewayKind::SharedLane),
            Cycleway::ShareBusway => Some(CyclewayKind::ShareBusway),
            Cycleway::Track => Some(CyclewayKind::Track),
            Cycleway::Lane => Some(CyclewayKind::Lane),
            Cycleway::Separate => Some(CyclewayKind::Separate),
            Cycleway::None | Cycleway::Other(_) => None,
        }
    }
}

impl FromStr for Cycleway {
    type Err = std::convert::Infallible;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.trim() {
            "shared_lane" => Cycleway::SharedLane,
            "share_busway" => Cycleway::ShareBusway,
            "track" => Cycleway::Track,
            "lane" => Cycleway::Lane,
            "separate" => Cycleway::Separate,
            "none" | "no" => Cycleway::None,
            other => Cycleway::Other(other.to_string()),
        })
    }
}

/// The cycleway actually ridden on: one of the five infrastructure
/// categories, or none.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CyclewayKind {
    SharedLane,
    ShareBusway,
    Track,
    Lane,
    Separate,
    None,
}

impl CyclewayKind {
    pub const ALL: [CyclewayKind; 6] = [
        CyclewayKind::SharedLane,
        CyclewayKind::ShareBusway,
        CyclewayKind::Track,
        CyclewayKind::Lane,
        CyclewayKind::Separate,
        CyclewayKind::None,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            CyclewayKind::SharedLane => "shared_lane",
            CyclewayKind::ShareBusway => "share_busway",
            CyclewayKind::Track => "track",
            CyclewayKind::Lane => "lane",
            CyclewayKind::Separate => "separate",
            CyclewayKind::None => "none",
        }
    }

    pub fn parse(s: &str) -> Option<CyclewayKind> {
        CyclewayKind::ALL.into_iter().find(|k| k.as_str() == s)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct WayTags {
    pub maxspeed: Option<MaxSpeed>,
    pub highway: Option<String>,
    pub name: Option<String>,
    #[serde(rename = "ref")]
    pub reference: Option<String>,
    pub lanes: Option<u32>,
    pub traffic_calming: Option<String>,
    pub cycleway_left: Option<Cycleway>,
    pub cycleway_right: Option<Cycleway>,
    pub cycleway_both: Option<Cycleway>,
}

impl WayTags {
    pub fn from_tags(tags: &BTreeMap<String, String>) -> WayTags {
        let get = |k: &str| tags.get(k).map(|v| v.trim().to_string()).filter(|v| !v.is_empty());
        let cycleway = |k: &str| get(k).map(|v| v.parse::<Cycleway>().expect("infallible"));
        WayTags {
            maxspeed: get("maxspeed").and_then(|v| MaxSpeed::parse(&v)),
            highway: get("highway"),
            name: get("name"),
            reference: get("ref"),
            lanes: get("lanes").and_then(|v| v.parse().ok()),
            traffic_calming: get("traffic_calming"),
            cycleway_left: cycleway("cycleway:left"),
            cycleway_right: cycleway("cycleway:right"),
            cycleway_both: cycleway("cycleway:both"),
        }
    }
}
