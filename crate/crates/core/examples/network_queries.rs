//! Load an OSM extract, look up candidate roads near a point and route
//! between two positions.
//!
//!     cargo run --example network_queries

use cycletrail::geo::GeoPoint;
use cycletrail::network::{parse_osm, shortest_route, Anchor, OsmFormat, SignalFilter};

fn main() -> cycletrail::Result<()> {
    let bytes = std::fs::read(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/toy/network.osm"))?;
    let load = parse_osm(&bytes, OsmFormat::Xml, &SignalFilter::default())?;
    let net = load.network;
    println!("{} nodes, {} ways, {} arcs", net.nodes().len(), net.ways().len(), net.arcs().len());
    for n in net.nodes().iter().filter(|n| n.is_traffic_signal) {
        println!("signal at node {} (degree {})", n.node_id, net.degree(n.node_id));
    }

    let p = GeoPoint::new(51.50185, -0.09570)?;
    let cands = net.nearest_candidates(&p, 50.0, 8);
    for c in &cands {
        let way = net.way(c.way_id).and_then(|w| w.tags.name.clone()).unwrap_or_default();
        println!("candidate arc {:>2} on {:<14} {:6.2} m away, {:7.2} m along", c.arc.0, way, c.distance_m, c.offset_m);
    }

    let from = Anchor::new(cands[0].arc, cands[0].offset_m);
    let far = net.nearest_candidates(&GeoPoint::new(51.50540, -0.09180)?, 50.0, 1);
    let to = Anchor::new(far[0].arc, far[0].offset_m);
    let route = shortest_route(&net, &from, &to)?;
    println!("route {:.1} m via nodes {:?}", route.distance_m, route.node_sequence(&net, &from, &to));
    Ok(())
}
