use std::f64::consts::TAU;

use capdyn::almost_period::{equicontinuity_modulus, find_almost_period, AlmostPeriodConfig, Witness};
use capdyn::metric_core::Region;
use capdyn::sysdef::fixtures::{circle_rotation, disk_twist, plane_rotation};
use capdyn::{Certificate, Point, Space};
use proptest::prelude::*;

fn arc(a: f64) -> f64 {
    let d = a.rem_euclid(TAU);
    d.min(TAU - d)
}

/// Smallest `N` such that every `N` consecutive integers in `[-span, span]`
/// contain an `n` with `returns(n)`, found by checking every window.
fn brute_force_window(span: i64, returns: impl Fn(i64) -> bool) -> Option<u64> {
    let hits: Vec<i64> = (-span..=span).map(|n| i64::from(returns(n))).collect();
    let mut prefix = vec![0i64; hits.len() + 1];
    for (i, h) in hits.iter().enumerate() {
        prefix[i + 1] = prefix[i] + h;
    }
    (1..=hits.len()).find_map(|n| {
        (0..=hits.len() - n)
            .all(|s| prefix[s + n] - prefix[s] > 0)
            .then_some(n as u64)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn rotation_windows_match_brute_force(alpha in 0.0..1.0f64, eps in 0.05..0.5f64) {
        let sys = circle_rotation(alpha);
        let sample = Space::circle().sample(8, 1, &Region::Default);
        let span = 3000;
        let v = find_almost_period(&sys, &sample, &AlmostPeriodConfig::new(eps, span, span)).unwrap();
        // Every point moves by the same arc under a rotation.
        let oracle = brute_force_window(span as i64, |n| arc(n as f64 * alpha * TAU) < eps);
        match v.window() {
            Some(n) => prop_assert_eq!(Some(n), oracle),
            None => prop_assert!(!v.is_certified()),
        }
    }

    #[test]
    fn rational_rotations_return_after_exactly_q(p in 1u64..12, q in 2u64..13) {
        prop_assume!(gcd(p, q) == 1 && p < q);
        let sys = circle_rotation(p as f64 / q as f64);
        let sample = Space::circle().sample(16, 0, &Region::Default);
        let v = find_almost_period(&sys, &sample, &AlmostPeriodConfig::new(1e-3, 100, 1000)).unwrap();
        prop_assert_eq!(v.window(), Some(q));
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

#[test]
fn plane_rotation_window_is_refuted_on_large_radii() {
    let sys = plane_rotation(TAU * 0.618_033_988_749_894_9);
    let sample = Space::plane().sample(256, 0, &Region::Ball { radius: 100.0 });
    let v = find_almost_period(&sys, &sample, &AlmostPeriodConfig::new(0.1, 100, 2000)).unwrap();
    assert!(v.is_refuted());
    let w = v.witness.as_ref().unwrap();
    assert!(w.replay(&sys).unwrap() <= 1e-12);
    match w {
        Witness::EmptyWindow { entries, .. } => assert_eq!(entries.len(), 101),
        other => panic!("unexpected witness {other:?}"),
    }
}

#[test]
fn disk_twist_fails_equicontinuity_at_an_interior_point() {
    let sys = disk_twist();
    let x = Point::polar(0.5, 0.0);
    let schedule = [0.05, 0.01, 0.002];
    let v = equicontinuity_modulus(&sys, &x, 0.1, 10_000, &schedule, 16).unwrap();
    assert!(v.is_refuted());
    let w = v.witness.as_ref().unwrap();
    assert!(w.replay(&sys).unwrap() <= 1e-12);
    if let Witness::Equicontinuity {
        probe_distance,
        distance,
        ..
    } = w
    {
        assert!(*probe_distance <= 0.002 * 1.01);
        assert!(*distance >= 0.1);
    }
}

#[test]
fn rotation_is_equicontinuous_with_delta_epsilon() {
    let sys = circle_rotation(0.3);
    let v = equicontinuity_modulus(&sys, &Point::Angle(1.0), 0.1, 1000, &[0.05, 0.01], 16).unwrap();
    match v.certificate {
        Some(Certificate::Modulus { worst, .. }) => assert!(worst < 0.1),
        other => panic!("expected a modulus, got {other:?}"),
    }
}
