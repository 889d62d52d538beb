//! Fetch way tags by id from an Overpass endpoint.
//!
//! Prints the query; sends it only when `--send` is given. The endpoint
//! can be overridden with `CYCLETRAIL_OVERPASS_URL`.
//!
//!     cargo run --example overpass_backfill -- 4247585 [--send]

use cycletrail::network::overpass::{way_query, OverpassClient, OverpassConfig};
use cycletrail::network::WayTags;

fn main() -> cycletrail::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let ids: Vec<i64> = args.iter().filter_map(|a| a.parse().ok()).collect();
    let ids = if ids.is_empty() { vec![4247585] } else { ids };
    println!("{}", way_query(&ids));

    if args.iter().any(|a| a == "--send") {
        let cfg = OverpassConfig { enabled: true, ..Default::default() };
        let client = OverpassClient::new(&cfg)?;
        println!("endpoint: {}", client.endpoint());
        for (id, tags) in client.fetch_way_tags(&ids)? {
            let typed = WayTags::from_tags(&tags);
            println!("way {id}: highway={:?} maxspeed={:?} cycleway:left={:?}", typed.highway, typed.maxspeed, typed.cycleway_left);
        }
    }
    Ok(())
}
