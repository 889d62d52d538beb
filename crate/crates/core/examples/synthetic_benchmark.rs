//! Match noisy traces of known routes on a synthetic grid and report the
//! error rate distribution and matching throughput.
//!
//!     cargo run --release --example synthetic_benchmark [trials] [sigma_m]

use std::time::Instant;

use cycletrail::evaluation::{evaluate_against_truth, RouteEdgeSet};
use cycletrail::geo::Timestamp;
use cycletrail::matcher::{match_segment, MatcherConfig};
use cycletrail::preprocess::{preprocess, PreprocessConfig};
use cycletrail::synthetic::{add_noise, sample_route, GridSpec};
use rand::rngs::StdRng;
use rand::SeedableRng;

fn main() -> cycletrail::Result<()> {
    let mut args = std::env::args().skip(1);
    let trials: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(100);
    let sigma: f64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(5.0);

    let grid = GridSpec::default();
    let net = grid.network()?;
    let mut rng = StdRng::seed_from_u64(2024);
    let mut rates = Vec::new();
    let (mut points, mut matching_s) = (0usize, 0.0);
    while rates.len() < trials {
        let route = grid.random_route(&mut rng, 12);
        if route.len() < 13 {
            continue;
        }
        let clean = sample_route(&net, &route, 5.0, Timestamp::from_epoch_seconds(1.7e9)?, "synthetic")?;
        let noisy = add_noise(&clean, sigma, &mut rng)?;
        let truth = RouteEdgeSet::from_node_path(&net, &route, true)?;
        for seg in preprocess(&noisy, &PreprocessConfig::default())?.segments {
            let t0 = Instant::now();
            let trip = match_segment(&net, &seg, &MatcherConfig::default())?;
            matching_s += t0.elapsed().as_secs_f64();
            points += seg.points.len();
            rates.push(evaluate_against_truth(&net, &trip, &truth)?.error_rate_pct);
        }
    }
    rates.sort_by(f64::total_cmp);
    let within = rates.iter().filter(|&&e| e <= 10.0).count();
    println!("{} trials, sigma {sigma} m", rates.len());
    println!("error rate median {:.2}%, 90th percentile {:.2}%, max {:.2}%", rates[rates.len() / 2], rates[rates.len() * 9 / 10], rates[rates.len() - 1]);
    println!("{within} trials at or below 10%");
    println!("{:.0} points/s matched ({points} points in {matching_s:.2} s)", points as f64 / matching_s);
    Ok(())
}
