mod common;

use common::{check_cleaned, cleaning_config, corrupted_trace, gc_atan2};
use cycletrail::geo::{haversine_distance, speed_between, GeoPoint, Timestamp};
use cycletrail::preprocess::{preprocess, Trajectory, Waypoint};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;

fn p(lat: f64, lon: f64) -> GeoPoint {
    GeoPoint::new(lat, lon).unwrap()
}

#[test]
fn thousandth_of_a_degree_of_longitude() {
    let (a, b) = (p(51.5, 0.0), p(51.5, 0.001));
    let want = gc_atan2((51.5, 0.0), (51.5, 0.001));
    assert!((haversine_distance(&a, &b) - want).abs() <= 1e-6 * want);
    assert!((want - 69.2).abs() < 0.1);
}

#[test]
fn speed_of_a_two_second_pair() {
    let a = p(51.5, 0.0);
    let b = a.offset_m(0.0, 27.8).unwrap();
    let t0 = Timestamp::from_epoch_seconds(0.0).unwrap();
    let t1 = Timestamp::from_epoch_seconds(2.0).unwrap();
    let v = speed_between((&a, t0), (&b, t1)).unwrap();
    assert!((v - haversine_distance(&a, &b) / 2.0).abs() < 1e-12);
    assert!((v - 13.9).abs() < 1e-3);
}

fn coord() -> impl Strategy<Value = (f64, f64)> {
    (-80.0..80.0f64, -179.0..179.0f64)
}

proptest! {
    #[test]
    fn haversine_agrees_with_atan2_form(a in coord(), b in coord()) {
        let d = haversine_distance(&p(a.0, a.1), &p(b.0, b.1));
        let want = gc_atan2(a, b);
        prop_assert!((d - want).abs() <= 1e-6 * want.max(1.0));
    }

    #[test]
    fn haversine_symmetric_and_triangular(a in coord(), b in coord(), c in coord()) {
        let (a, b, c) = (p(a.0, a.1), p(b.0, b.1), p(c.0, c.1));
        prop_assert_eq!(haversine_distance(&a, &b), haversine_distance(&b, &a));
        prop_assert_eq!(haversine_distance(&a, &a), 0.0);
        prop_assert!(haversine_distance(&a, &c) <= haversine_distance(&a, &b) + haversine_distance(&b, &c) + 1e-6);
    }

    #[test]
    fn cleaned_traces_keep_their_promises(seed in any::<u64>(), n in 2usize..400) {
        let cfg = cleaning_config();
        let raw = corrupted_trace(&mut StdRng::seed_from_u64(seed), n);
        let out = preprocess(&raw, &cfg).unwrap();
        prop_assert_eq!(check_cleaned(&out, &cfg), Ok(()));
        for s in &out.report.stages {
            prop_assert_eq!(s.points_in + s.added, s.points_out + s.dropped);
        }
    }
}

fn ride(times: &[f64]) -> Trajectory {
    let o = p(51.5, -0.1);
    Trajectory::new(
        "r",
        times
            .iter()
            .enumerate()
            .map(|(i, &t)| Waypoint {
                point: o.offset_m(4.0 * (t - times[0]), 0.0).unwrap(),
                time: Timestamp::from_epoch_seconds(1_700_000_000.0 + t).unwrap(),
                source_index: i,
            })
            .collect(),
    )
}

#[test]
fn hundred_second_gap_gives_two_segments() {
    let mut times: Vec<f64> = (0..150).map(f64::from).collect();
    times.extend((0..150).map(|i| 249.0 + f64::from(i)));
    let out = preprocess(&ride(&times), &cleaning_config()).unwrap();
    assert_eq!(out.segments.len(), 2);
    assert_eq!(out.report.splits, 1);
    assert_eq!(out.segments[1].segment_index, 1);
    let gap = out.segments[1].points[0].time.seconds_since(out.segments[0].points.last().unwrap().time);
    assert_eq!(gap, 100.0);
}

#[test]
fn sixty_second_gap_is_filled_not_split() {
    let mut times: Vec<f64> = (0..10).map(f64::from).collect();
    times.extend((0..10).map(|i| 69.0 + f64::from(i)));
    let out = preprocess(&ride(&times), &cleaning_config()).unwrap();
    assert_eq!(out.segments.len(), 1);
    assert_eq!(out.segments[0].points.len(), 79);
}
