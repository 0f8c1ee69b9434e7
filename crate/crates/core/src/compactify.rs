//! One-point compactification of the plane with the chordal metric, and the
//! paired planar/chordal analysis of planar homeomorphisms.
//!
//! The chordal metric is the Euclidean distance between stereographic images
//! on the unit sphere (diameter 2):
//!
//! ```text
//! d(z, w) = 2|z - w| / sqrt((1 + |z|²)(1 + |w|²))
//! d(z, ∞) = 2 / sqrt(1 + |z|²)
//! ```

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::almost_period::{classify_cap, find_almost_period, AlmostPeriodConfig, CapBudgets, Verdict};
use crate::dynamics::System;
use crate::error::{Error, Result};
use crate::metric_core::{Point, Space, SpaceKind};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpherePoint {
    Finite([f64; 2]),
    Infinity,
}

impl SpherePoint {
    fn norm_sq(z: &[f64; 2]) -> f64 {
        z[0] * z[0] + z[1] * z[1]
    }
}

pub fn chordal_distance(p: &SpherePoint, q: &SpherePoint) -> f64 {
    match (p, q) {
        (SpherePoint::Infinity, SpherePoint::Infinity) => 0.0,
        (SpherePoint::Finite(z), SpherePoint::Infinity) | (SpherePoint::Infinity, SpherePoint::Finite(z)) => {
            2.0 / (1.0 + SpherePoint::norm_sq(z)).sqrt()
        }
        (SpherePoint::Finite(z), SpherePoint::Finite(w)) => {
            let diff = (z[0] - w[0]).hypot(z[1] - w[1]);
            if diff == 0.0 {
                return 0.0;
            }
            2.0 * diff / ((1.0 + SpherePoint::norm_sq(z)) * (1.0 + SpherePoint::norm_sq(w))).sqrt()
        }
    }
}

/// Probe points at chordal distance close to `delta` from `s`.
pub(crate) fn sphere_ring(s: &SpherePoint, delta: f64, count: usize) -> Vec<Point> {
    let dirs = (0..count).map(|j| TAU * j as f64 / count as f64);
    match s {
        SpherePoint::Infinity => {
            if delta >= 2.0 {
                return vec![Point::Sphere(SpherePoint::Finite([0.0, 0.0]))];
            }
            let r = (4.0 / (delta * delta) - 1.0).sqrt();
            dirs.map(|t| Point::Sphere(SpherePoint::Finite([r * t.cos(), r * t.sin()])))
                .collect()
        }
        SpherePoint::Finite(z) => {
            let scale = (1.0 + SpherePoint::norm_sq(z)) / 2.0;
            dirs.map(|t| {
                let (c, sn) = (t.cos(), t.sin());
                let mut step = delta * scale;
                // one secant correction toward the requested chordal radius
                for _ in 0..2 {
                    let w = SpherePoint::Finite([z[0] + step * c, z[1] + step * sn]);
                    let d = chordal_distance(s, &w);
                    if d > 0.0 {
                        step *= delta / d;
                    }
                }
                Point::Sphere(SpherePoint::Finite([z[0] + step * c, z[1] + step * sn]))
            })
            .collect()
        }
    }
}

/// Extend a planar homeomorphism to the sphere by fixing ∞.
pub fn extend_map(sys: &System) -> Result<System> {
    if !matches!(sys.space().kind(), SpaceKind::Plane) {
        return Err(Error::DomainMismatch(format!(
            "extend_map needs a planar system, got {:?}",
            sys.space().kind()
        )));
    }
    let lift = |f: crate::dynamics::PointMap| {
        move |p: &Point| match p {
            Point::Sphere(SpherePoint::Finite(z)) => match f(&Point::Planar(*z)) {
                Point::Planar(w) => Point::Sphere(SpherePoint::Finite(w)),
                _ => Point::Sphere(SpherePoint::Infinity),
            },
            other => *other,
        }
    };
    Ok(System::new(
        format!("{} on the sphere", sys.name()),
        Space::sphere(),
        lift(sys.forward_map()),
        lift(sys.inverse_map()),
    ))
}

pub fn to_sphere(p: &Point) -> Option<Point> {
    p.as_planar().map(|z| Point::Sphere(SpherePoint::Finite(z)))
}

/// Radii of the logarithmic ladder added to every sphere sample.
pub const LADDER: [f64; 7] = [1.0, 1e1, 1e2, 1e3, 1e4, 1e5, 1e6];

/// `∞`, then a ladder point per radius, then the planar sample.
pub fn sphere_sample(planar: &[Point]) -> Vec<Point> {
    let mut out = vec![Point::Sphere(SpherePoint::Infinity)];
    for (k, r) in LADDER.iter().enumerate() {
        let t = 0.7 * k as f64;
        out.push(Point::Sphere(SpherePoint::Finite([r * t.cos(), r * t.sin()])));
    }
    out.extend(planar.iter().filter_map(to_sphere));
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SphereAnalysisConfig {
    pub almost_period: AlmostPeriodConfig,
    pub cap: CapBudgets,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricVerdicts {
    pub almost_periodic: Verdict,
    pub compactly_almost_periodic: Verdict,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SphereAnalysis {
    pub euclidean: MetricVerdicts,
    pub chordal: MetricVerdicts,
}

/// Run the window search on `window_sample` and the compact-almost-periodicity
/// classification on `structural_sample`, in the Euclidean metric and, after
/// extension, in the chordal metric.
pub fn analyze_on_sphere(
    sys: &System,
    window_sample: &[Point],
    structural_sample: &[Point],
    config: &SphereAnalysisConfig,
) -> Result<SphereAnalysis> {
    let sphere = extend_map(sys)?;
    let eps = config.almost_period.epsilon;
    if structural_sample.is_empty() {
        return Err(Error::InvalidArgument("empty structural sample".into()));
    }
    let euclidean = MetricVerdicts {
        almost_periodic: find_almost_period(sys, window_sample, &config.almost_period)?,
        compactly_almost_periodic: classify_cap(sys, structural_sample, eps, &config.cap)?,
    };
    let chordal = MetricVerdicts {
        almost_periodic: find_almost_period(&sphere, &sphere_sample(window_sample), &config.almost_period)?,
        compactly_almost_periodic: classify_cap(&sphere, &sphere_sample(structural_sample), eps, &config.cap)?,
    };
    Ok(SphereAnalysis { euclidean, chordal })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn origin_to_infinity_is_two() {
        let d = chordal_distance(&SpherePoint::Finite([0.0, 0.0]), &SpherePoint::Infinity);
        assert!((d - 2.0).abs() < 1e-15);
        assert_eq!(chordal_distance(&SpherePoint::Infinity, &SpherePoint::Infinity), 0.0);
    }

    #[test]
    fn extension_requires_a_planar_system() {
        let sys = System::new("id", Space::circle(), |p| *p, |p| *p);
        assert!(extend_map(&sys).is_err());
    }

    #[test]
    fn extension_fixes_infinity() {
        let sys = System::new(
            "shift",
            Space::plane(),
            |p| match p {
                Point::Planar(z) => Point::Planar([z[0] + 1.0, z[1]]),
                o => *o,
            },
            |p| match p {
                Point::Planar(z) => Point::Planar([z[0] - 1.0, z[1]]),
                o => *o,
            },
        );
        let ext = extend_map(&sys).unwrap();
        let inf = Point::Sphere(SpherePoint::Infinity);
        assert_eq!(ext.forward(&inf), inf);
        assert_eq!(
            ext.forward(&Point::Sphere(SpherePoint::Finite([1.0, 2.0]))),
            Point::Sphere(SpherePoint::Finite([2.0, 2.0]))
        );
    }

    #[test]
    fn ring_about_infinity_is_exact() {
        for y in sphere_ring(&SpherePoint::Infinity, 0.05, 8) {
            if let Point::Sphere(s) = y {
                assert!((chordal_distance(&s, &SpherePoint::Infinity) - 0.05).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn sample_leads_with_infinity_and_ladder() {
        let s = sphere_sample(&[Point::planar(0.5, 0.5)]);
        assert_eq!(s[0], Point::Sphere(SpherePoint::Infinity));
        assert_eq!(s.len(), 1 + LADDER.len() + 1);
    }
}
