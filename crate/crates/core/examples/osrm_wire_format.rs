//! Requests and responses of OSRM-compatible match services.
//!
//! Without arguments this only builds a request URL, parses a canned
//! response and renders a built-in match in the same format. Pass a base
//! URL (e.g. `http://localhost:5000`) to send the toy trace to a live
//! service.
//!
//!     cargo run --example osrm_wire_format [base_url]

use cycletrail::matcher::osrm::{match_url, parse_match_response, to_osrm_response, MatchClient, RemoteConfig};
use cycletrail::matcher::{match_segment, MatcherConfig};
use cycletrail::network::{parse_osm, OsmFormat, SignalFilter};
use cycletrail::preprocess::{parse_gpx, preprocess, PreprocessConfig};
use serde_json::json;

fn main() -> cycletrail::Result<()> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/toy");
    let trace = parse_gpx(&std::fs::read(format!("{dir}/gpx/p02_lunch.gpx"))?, "p02_lunch")?.trajectory;
    let seg = preprocess(&trace, &PreprocessConfig::default())?.segments.remove(0);

    let cfg = RemoteConfig::default();
    let url = match_url(&cfg, &seg.points[..3]);
    println!("request for the first three points:\n  {url}\n");

    let mut first3 = seg.clone();
    first3.points.truncate(3);
    let canned = json!({
        "code": "Ok",
        "matchings": [{"confidence": 0.9, "distance": 10.2, "duration": 2.0, "legs": [
            {"distance": 5.0, "duration": 1.0, "annotation": {"nodes": [130, 131]}},
            {"distance": 5.2, "duration": 1.0, "annotation": {"nodes": [130, 131]}}
        ]}],
        "tracepoints": [
            {"location": [-0.1, 51.5027], "matchings_index": 0, "waypoint_index": 0, "distance": 1.2},
            {"location": [-0.09993, 51.5027], "matchings_index": 0, "waypoint_index": 1, "distance": 0.8},
            {"location": [-0.09985, 51.5027], "matchings_index": 0, "waypoint_index": 2, "distance": 2.1}
        ]
    });
    let parsed = parse_match_response(&first3, &canned)?;
    println!("canned response: {} points, legs {:?} m\n", parsed.points.len(), parsed.legs.iter().map(|l| l.distance_m).collect::<Vec<_>>());

    let net = parse_osm(&std::fs::read(format!("{dir}/network.osm"))?, OsmFormat::Xml, &SignalFilter::default())?.network;
    let builtin = match_segment(&net, &seg, &MatcherConfig::default())?;
    let doc = to_osrm_response(&builtin, &seg);
    println!("built-in match as a service response (first tracepoint):");
    println!("{}", serde_json::to_string_pretty(&doc["tracepoints"][0])?);

    if let Some(base_url) = std::env::args().nth(1) {
        let client = MatchClient::new(RemoteConfig { base_url, ..cfg })?;
        let remote = client.remote_match(&seg)?;
        println!("\nremote: {} points matched, {} discarded", remote.trip.points.len(), remote.trip.discarded.len());
    }
    Ok(())
}
