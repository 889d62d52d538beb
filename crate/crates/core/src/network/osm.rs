//! OSM XML and Overpass JSON ingestion.

use serde::Deserialize;

use super::{NetworkBuilder, RoadNetwork, SignalFilter, Tags};
use crate::error::{Error, Result};
use crate::geo::GeoPoint;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OsmFormat {
    Xml,
    OverpassJson,
}

impl OsmFormat {
    /// Guess from the first non-whitespace byte.
    pub fn sniff(bytes: &[u8]) -> OsmFormat {
        match bytes.iter().find(|b| !b.is_ascii_whitespace()) {
            Some(b'{') => OsmFormat::OverpassJson,
            _ => OsmFormat::Xml,
        }
    }
}

/// A loaded network plus the per-way problems that caused ways to be skipped.
#[derive(Debug)]
pub struct OsmLoad {
    pub network: RoadNetwork,
    pub warnings: Vec<Error>,
}

pub fn parse_osm(bytes: &[u8], format: OsmFormat, signals: &SignalFilter) -> Result<OsmLoad> {
    let mut builder = NetworkBuilder::new().signal_filter(signals.clone());
    match format {
        OsmFormat::Xml => read_xml(bytes, &mut builder)?,
        OsmFormat::OverpassJson => read_json(bytes, &mut builder)?,
    }
    let (network, warnings) = builder.build();
    Ok(OsmLoad { network, warnings })
}

fn read_tags(node: roxmltree::Node<'_, '_>) -> Tags {
    node.children()
        .filter(|c| c.has_tag_name("tag"))
        .filter_map(|c| Some((c.attribute("k")?.to_string(), c.attribute("v")?.to_string())))
        .collect()
}

fn attr<T: std::str::FromStr>(node: roxmltree::Node<'_, '_>, name: &str) -> Result<T> {
    node.attribute(name)
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| Error::MalformedOsm(format!("<{}> missing or invalid '{name}'", node.tag_name().name())))
}

fn read_xml(bytes: &[u8], builder: &mut NetworkBuilder) -> Result<()> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::MalformedOsm(e.to_string()))?;
    let doc = roxmltree::Document::parse(text).map_err(|e| Error::MalformedOsm(e.to_string()))?;
    let root = doc.root_element();
    if !root.has_tag_name("osm") {
        return Err(Error::MalformedOsm(format!("root element is <{}>", root.tag_name().name())));
    }
    for el in root.children().filter(|n| n.is_element()) {
        match el.tag_name().name() {
            "node" => {
                let point = GeoPoint::new(attr(el, "lat")?, attr(el, "lon")?)
                    .map_err(|e| Error::MalformedOsm(e.to_string()))?;
                builder.add_node(attr(el, "id")?, point, read_tags(el));
            }
            "way" => {
                let refs = el
                    .children()
                    .filter(|c| c.has_tag_name("nd"))
                    .map(|c| attr::<i64>(c, "ref"))
                    .collect::<Result<Vec<_>>>()?;
                builder.add_way(attr(el, "id")?, refs, read_tags(el));
            }
            _ => {}
        }
    }
    Ok(())
}

#[derive(Deserialize)]
struct OverpassDoc {
    elements: Vec<OverpassElement>,
}

#[derive(Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum OverpassElement {
    Node {
        id: i64,
        lat: f64,
        lon: f64,
        #[serde(default)]
        tags: Tags,
    },
    Way {
        id: i64,
        #[serde(default)]
        nodes: Vec<i64>,
        #[serde(default)]
        tags: Tags,
    },
    #[serde(other)]
    Other,
}

fn read_json(bytes: &[u8], builder: &mut NetworkBuilder) -> Result<()> {
    let doc: OverpassDoc = serde_json::from_slice(bytes).map_err(|e| Error::MalformedOsm(e.to_string()))?;
    for el in doc.elements {
        match el {
            OverpassElement::Node { id, lat, lon, tags } => {
                let point = GeoPoint::new(lat, lon).map_err(|e| Error::MalformedOsm(e.to_string()))?;
                builder.add_node(id, point, tags);
            }
            OverpassElement::Way { id, nodes, tags } => {
                builder.add_way(id, nodes, tags);
            }
            OverpassElement::Other => {}
        }
    }
    Ok(())
}
