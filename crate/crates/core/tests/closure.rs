use std::f64::consts::TAU;
use std::sync::Arc;

use capdyn::group_closure::{
    check_group_laws, check_limit_isometries, compose_snapshots, enumerate_closure, ClosureNet, MapSnapshot,
};
use capdyn::metric_core::{sup_map_distance, Region};
use capdyn::sysdef::fixtures::{circle_rotation, discrete_bijection, GOLDEN};
use capdyn::{Point, Space};
use proptest::prelude::*;

fn circle_sample(count: usize, seed: u64) -> Arc<Vec<Point>> {
    Arc::new(Space::circle().sample(count, seed, &Region::Default))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn iterate_snapshots_compose_additively(alpha in 0.0..1.0f64, a in -60i64..60, b in -60i64..60, seed in 0u64..100) {
        let sys = circle_rotation(alpha);
        let sample = circle_sample(8, seed);
        let fa = MapSnapshot::of_iterate(&sys, sample.clone(), a);
        let fb = MapSnapshot::of_iterate(&sys, sample.clone(), b);
        let fab = MapSnapshot::of_iterate(&sys, sample, a + b);
        let composed = compose_snapshots(&sys, &fa, &fb).unwrap();
        prop_assert!(sup_map_distance(sys.space(), &composed, &fab).unwrap() <= 1e-11);
    }

    #[test]
    fn rotation_snapshots_are_isometries(alpha in 0.0..1.0f64, n in -30i64..30) {
        let sys = circle_rotation(alpha);
        let sample = circle_sample(12, 3);
        let net = ClosureNet::from_snapshots(sys.space(), 0.1, vec![MapSnapshot::of_iterate(&sys, sample, n)]).unwrap();
        let pairs: Vec<(usize, usize)> = (0..12).flat_map(|i| (i + 1..12).map(move |j| (i, j))).collect();
        let r = check_limit_isometries(&net, &sys, &pairs).unwrap();
        prop_assert!(r.defect <= 1e-12);
    }
}

#[test]
fn rational_rotation_closure_is_cyclic_of_order_q() {
    let sys = circle_rotation(3.0 / 8.0);
    let sample = circle_sample(16, 0);
    let net = enumerate_closure(&sys, &sample, 1e-3, 10_000, 2_000).unwrap();
    assert!(net.stabilized);
    assert_eq!(net.len(), 8);
    let laws = check_group_laws(&net, &sys).unwrap();
    assert!(laws.holds_within(1e-12), "{laws:?}");
}

#[test]
fn golden_closure_stabilizes_within_the_net_bound() {
    let sys = circle_rotation(GOLDEN);
    let sample = circle_sample(16, 0);
    let eps = 0.1;
    let net = enumerate_closure(&sys, &sample, eps, 10_000, 2_000).unwrap();
    assert!(net.stabilized);
    assert!(net.len() <= (TAU / eps).ceil() as usize + 1);
    let laws = check_group_laws(&net, &sys).unwrap();
    assert!(laws.holds_within(2.0 * eps), "{laws:?}");
}

#[test]
fn bijections_converge_to_a_non_surjective_limit() {
    let m = 50;
    let sample: Arc<Vec<Point>> = Arc::new((1..=m).map(Point::Integer).collect());
    let doubling = MapSnapshot::of_map(sample.clone(), "doubling", |p| match p {
        Point::Integer(k) => Point::Integer(2 * k),
        o => *o,
    });
    let space = Space::discrete();
    for n in [m, 2 * m, 4 * m] {
        let sys = discrete_bijection(n);
        let f = MapSnapshot::of_iterate(&sys, sample.clone(), 1);
        assert_eq!(sup_map_distance(&space, &f, &doubling).unwrap(), 0.0);
    }
    let early = MapSnapshot::of_iterate(&discrete_bijection(m / 2), sample.clone(), 1);
    assert_eq!(sup_map_distance(&space, &early, &doubling).unwrap(), 1.0);

    let net = ClosureNet::from_snapshots(&space, 0.5, vec![doubling]).unwrap();
    let pairs: Vec<(usize, usize)> = (0..m as usize)
        .flat_map(|i| (i + 1..m as usize).map(move |j| (i, j)))
        .collect();
    let r = check_limit_isometries(&net, &discrete_bijection(m), &pairs).unwrap();
    assert_eq!(r.defect, 0.0);
    assert_eq!(r.surjectivity_gap, 1.0);
}
