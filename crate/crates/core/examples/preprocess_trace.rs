//! Clean one GPX file and print what each filter did.
//!
//!     cargo run --example preprocess_trace [path/to/file.gpx]

use cycletrail::preprocess::{parse_gpx, preprocess, PreprocessConfig};

fn main() -> cycletrail::Result<()> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/toy/gpx/p01_evening.gpx").to_string());
    let parsed = parse_gpx(&std::fs::read(&path)?, "trace")?;
    println!("{} points read, {} without time", parsed.trajectory.len(), parsed.missing_time);

    let out = preprocess(&parsed.trajectory, &PreprocessConfig::default())?;
    println!("{:<22} {:>6} {:>6} {:>8} {:>6}", "stage", "in", "out", "dropped", "added");
    for s in &out.report.stages {
        println!("{:<22} {:>6} {:>6} {:>8} {:>6}", s.stage, s.points_in, s.points_out, s.dropped, s.added);
    }
    println!("splits: {}, short segments discarded: {}", out.report.splits, out.report.short_segments_discarded);
    for seg in &out.segments {
        let (a, b) = (seg.points.first().unwrap(), seg.points.last().unwrap());
        println!("segment {}: {} points over {:.0} s", seg.key(), seg.points.len(), b.time.seconds_since(a.time));
    }
    Ok(())
}
