//! Run every stage on the bundled toy data and list the outputs.
//!
//!     cargo run --example full_pipeline [output_dir]

use std::path::Path;

use cycletrail::pipeline::{cmd_pipeline, RunConfig};

fn main() -> cycletrail::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/toy");
    let mut cfg = RunConfig::load(&dir.join("config.toml"))?;
    let tmp = tempfile::tempdir()?;
    cfg.output_dir = std::env::args().nth(1).map_or_else(|| tmp.path().to_path_buf(), Into::into);
    cmd_pipeline(&cfg)?;

    for name in ["cleaned_trip.csv", "matched_trip.csv", "trip_atrributes.csv", "variables.csv", "evaluation.csv"] {
        let text = std::fs::read_to_string(cfg.output_dir.join(name))?;
        let header = text.lines().next().unwrap_or("");
        println!("{name}: {} rows, {} columns", text.lines().count() - 1, header.split(',').count());
    }
    println!("\n{}", std::fs::read_to_string(cfg.output_dir.join("evaluation.csv"))?);
    print!("{}", std::fs::read_to_string(cfg.output_dir.join("variables.csv"))?);
    Ok(())
}
