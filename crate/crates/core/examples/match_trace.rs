//! Map-match a cleaned trace with the built-in HMM matcher.
//!
//!     cargo run --example match_trace

use cycletrail::matcher::{match_segment, MatcherConfig};
use cycletrail::network::{parse_osm, OsmFormat, SignalFilter};
use cycletrail::preprocess::{parse_gpx, preprocess, PreprocessConfig};

fn main() -> cycletrail::Result<()> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/toy");
    let net = parse_osm(&std::fs::read(format!("{dir}/network.osm"))?, OsmFormat::Xml, &SignalFilter::default())?.network;
    let trace = parse_gpx(&std::fs::read(format!("{dir}/gpx/p01_morning.gpx"))?, "p01_morning")?.trajectory;
    let segments = preprocess(&trace, &PreprocessConfig::default())?.segments;

    let cfg = MatcherConfig::default();
    for seg in &segments {
        let trip = match_segment(&net, seg, &cfg)?;
        println!(
            "{}: {} of {} points matched, {:.1} m in {:.0} s, log p = {:.1}",
            trip.key(),
            trip.points.len(),
            seg.points.len(),
            trip.total_distance_m(),
            trip.total_duration_s(),
            trip.log_probability.unwrap_or(f64::NAN)
        );
        let mut last_way = None;
        for p in &trip.points {
            if p.way_id != last_way {
                let name = p.way_id.and_then(|id| net.way(id)).and_then(|w| w.tags.name.clone()).unwrap_or_default();
                println!("  from point {:>3}: way {:?} {name}", p.point_seq, p.way_id);
                last_way = p.way_id;
            }
        }
        let crossings: usize = trip.legs.iter().map(|l| l.intersections).sum();
        println!("  intersections passed: {crossings}");
    }
    Ok(())
}
