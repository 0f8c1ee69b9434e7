use std::f64::consts::TAU;

use capdyn::dynamics::iterate;
use capdyn::invariant_metric::{isometry_residual, metric_axioms_check, TruncatedInvariantMetric};
use capdyn::sysdef::fixtures::{circle_rotation, fixture, GOLDEN};
use capdyn::{Point, System};
use proptest::prelude::*;

fn brute_d_star(sys: &System, n_max: i64, x: &Point, y: &Point) -> f64 {
    (-n_max..=n_max)
        .map(|n| sys.space().distance(&iterate(sys, x, n), &iterate(sys, y, n)).unwrap())
        .fold(0.0, f64::max)
}

fn conjugated() -> System {
    fixture("conjugated_rotation").unwrap().system
}

fn disk_point(r: f64, t: f64) -> Point {
    Point::polar(r.sqrt(), t)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn d_star_matches_brute_force(r1 in 0.0..1.0f64, t1 in 0.0..TAU, r2 in 0.0..1.0f64, t2 in 0.0..TAU, n in 0u64..40) {
        let sys = conjugated();
        let (x, y) = (disk_point(r1, t1), disk_point(r2, t2));
        let m = TruncatedInvariantMetric::new(sys.clone(), n);
        let got = m.d_star(&x, &y).unwrap();
        prop_assert!((got.value - brute_d_star(&sys, n as i64, &x, &y)).abs() <= 1e-12);
        prop_assert!(got.value + 1e-12 >= sys.space().distance(&x, &y).unwrap());
        prop_assert!(got.argmax.unsigned_abs() <= n);
    }

    #[test]
    fn d_star_of_an_isometry_is_the_base_metric(a in 0.0..TAU, b in 0.0..TAU, n in 1u64..200) {
        let sys = circle_rotation(GOLDEN);
        let m = TruncatedInvariantMetric::new(sys.clone(), n);
        let (x, y) = (Point::Angle(a), Point::Angle(b));
        prop_assert!((m.value(&x, &y).unwrap() - sys.space().distance(&x, &y).unwrap()).abs() <= 1e-12);
    }
}

#[test]
fn d_star_satisfies_the_axioms_on_a_sample() {
    let f = fixture("conjugated_rotation").unwrap();
    let sample = f.sample(16, 0);
    for n in [10, 100] {
        let m = TruncatedInvariantMetric::new(f.system.clone(), n);
        let r = metric_axioms_check(|x, y| m.value(x, y), &sample).unwrap();
        assert!(r.holds_within(1e-12), "N = {n}: {r:?}");
        assert_eq!(r.triples, 16 * 16 * 16);
    }
}

#[test]
fn conjugated_rotation_residual_shrinks_as_truncation_doubles() {
    let f = fixture("conjugated_rotation").unwrap();
    let sample = f.sample(12, 0);
    let pairs: Vec<(Point, Point)> = sample.windows(2).map(|w| (w[0], w[1])).collect();
    let base = isometry_residual(&f.system, |x, y| f.system.space().distance(x, y), &pairs).unwrap();
    assert!(base > 0.0);
    let mut previous = base;
    for n in [10, 20, 40, 80, 160, 320] {
        let m = TruncatedInvariantMetric::new(f.system.clone(), n);
        let r = isometry_residual(&f.system, |x, y| m.value(x, y), &pairs).unwrap();
        assert!(r <= previous + 1e-12, "N = {n}: {r} > {previous}");
        previous = r;
    }
}
