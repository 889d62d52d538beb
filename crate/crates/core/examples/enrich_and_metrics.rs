//! Enrich matched trips with OSM attributes and derive a participant's
//! cycling variables.
//!
//!     cargo run --example enrich_and_metrics

use cycletrail::enrich::{enrich_trip, Handedness};
use cycletrail::matcher::{match_segment, MatcherConfig};
use cycletrail::metrics::{derive_variables, flag_stops, StopConfig};
use cycletrail::network::{parse_osm, OsmFormat, SignalFilter};
use cycletrail::preprocess::{parse_gpx, preprocess, PreprocessConfig};

fn main() -> cycletrail::Result<()> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/toy");
    let net = parse_osm(&std::fs::read(format!("{dir}/network.osm"))?, OsmFormat::Xml, &SignalFilter::default())?.network;

    let mut rows = Vec::new();
    for name in ["p01_morning", "p01_evening"] {
        let trace = parse_gpx(&std::fs::read(format!("{dir}/gpx/{name}.gpx"))?, name)?.trajectory;
        for seg in preprocess(&trace, &PreprocessConfig::default())?.segments {
            let trip = match_segment(&net, &seg, &MatcherConfig::default())?;
            let (mut enriched, warnings) = enrich_trip(&net, &trip, Handedness::LeftHandTraffic, "rider-01", None);
            for w in warnings {
                eprintln!("warning: {w}");
            }
            flag_stops(&mut enriched, &StopConfig::default());
            let mut last = None;
            for p in &enriched {
                let key = (p.way_id, p.direction, p.effective_cycleway);
                if Some(key) != last {
                    println!(
                        "{} #{:>3} {:<14} {:<12} {:<12} signals {}",
                        trip.key(),
                        p.point_seq,
                        p.tags.name.as_deref().unwrap_or("?"),
                        p.direction.as_str(),
                        p.effective_cycleway.as_str(),
                        p.signals_count
                    );
                    last = Some(key);
                }
            }
            println!("{} stopped points: {}", trip.key(), enriched.iter().filter(|p| p.stopped).count());
            rows.extend(enriched);
        }
    }

    let v = derive_variables("rider-01", &rows)?;
    println!("\n{}", serde_json::to_string_pretty(&v)?);
    Ok(())
}
