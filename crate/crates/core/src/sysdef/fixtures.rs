//! Registry of reference systems with the statuses each detector is expected
//! to return on them.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::expr::PHI;
use crate::almost_period::{default_schedule, AlmostPeriodConfig, CapBudgets, Status};
use crate::dynamics::System;
use crate::error::{Error, Result};
use crate::metric_core::{arc_distance, wrap_angle, Point, Region, Space, Subspace};

/// Golden rotation number `1/φ`.
pub const GOLDEN: f64 = 1.0 / PHI;

/// Number of circles kept in the shrinking-circles space.
pub const SHRINKING_CIRCLES: u32 = 64;

/// Orbit indices covered by the dense-subset membership oracle.
pub const DENSE_INDEX_BUDGET: i64 = 200_000;

/// Size of the finite permutation in the discrete fixture.
pub const BIJECTION_N: i64 = 100;

pub const NAMES: [&str; 11] = [
    "circle_rotation:3/8",
    "circle_rotation:golden",
    "dense_circle_subset",
    "finite_product_rotations",
    "discrete_bijections",
    "shrinking_circles",
    "disk_twist",
    "plane_irrational_rotation",
    "conjugated_rotation",
    "plane_translation",
    "annulus_rotation",
];

/// Detectors of the equivalence chain, plus metric variants.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Detector {
    #[serde(rename = "find_almost_period")]
    AlmostPeriod,
    #[serde(rename = "find_almost_period@chordal")]
    AlmostPeriodChordal,
    #[serde(rename = "equicontinuity_modulus")]
    Equicontinuity,
    #[serde(rename = "classify_cap")]
    CompactlyAlmostPeriodic,
    #[serde(rename = "classify_cap@chordal")]
    CompactlyAlmostPeriodicChordal,
    #[serde(rename = "invariant_isometry")]
    InvariantIsometry,
    #[serde(rename = "enumerate_closure")]
    CompactClosure,
}

impl Detector {
    pub fn name(self) -> &'static str {
        match self {
            Detector::AlmostPeriod => "find_almost_period",
            Detector::AlmostPeriodChordal => "find_almost_period@chordal",
            Detector::Equicontinuity => "equicontinuity_modulus",
            Detector::CompactlyAlmostPeriodic => "classify_cap",
            Detector::CompactlyAlmostPeriodicChordal => "classify_cap@chordal",
            Detector::InvariantIsometry => "invariant_isometry",
            Detector::CompactClosure => "enumerate_closure",
        }
    }
}

/// Per-fixture run parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixtureDefaults {
    pub epsilon: f64,
    pub sample: usize,
    pub region: Region,
    pub window_max: u64,
    pub span: u64,
    pub margin_fraction: f64,
    pub closure_budget: usize,
    pub patience: usize,
    pub eq_budget: u64,
    pub eq_points: usize,
    pub compactum_points: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compactum: Option<Vec<Point>>,
    /// Probe radii as fractions of ε.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe_fractions: Option<Vec<f64>>,
    /// Region of the sample for detectors other than the window search,
    /// when it differs from `region`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub structural_region: Option<Region>,
    pub closure_n_max: u64,
    pub closure_patience: u64,
    pub closure_sample: usize,
    pub truncation: u64,
}

impl Default for FixtureDefaults {
    fn default() -> Self {
        FixtureDefaults {
            epsilon: 0.1,
            sample: 64,
            region: Region::Default,
            window_max: 1000,
            span: 20_000,
            margin_fraction: 0.0,
            closure_budget: 20_000,
            patience: 20,
            eq_budget: 2_000,
            eq_points: 8,
            compactum_points: 16,
            compactum: None,
            probe_fractions: None,
            structural_region: None,
            closure_n_max: 10_000,
            closure_patience: 2_000,
            closure_sample: 16,
            truncation: 2_000,
        }
    }
}

impl FixtureDefaults {
    pub fn almost_period(&self, epsilon: f64) -> AlmostPeriodConfig {
        AlmostPeriodConfig::new(epsilon, self.window_max, self.span).with_margin(self.margin_fraction)
    }

    pub fn probe_schedule(&self, epsilon: f64) -> Vec<f64> {
        match &self.probe_fractions {
            Some(f) => f.iter().map(|k| k * epsilon).collect(),
            None => default_schedule(epsilon),
        }
    }

    pub fn cap_budgets(&self, epsilon: f64) -> CapBudgets {
        CapBudgets {
            closure_budget: self.closure_budget,
            patience: self.patience,
            eq_budget: self.eq_budget,
            probe_schedule: self.probe_schedule(epsilon),
            eq_points: self.eq_points,
            compactum_points: self.compactum_points,
            compactum: self.compactum.clone(),
            ..CapBudgets::new(epsilon)
        }
    }
}

#[derive(Clone, Debug)]
pub struct FixtureDescriptor {
    pub name: String,
    pub system: System,
    pub expected: BTreeMap<Detector, Status>,
    pub notes: Vec<String>,
    pub defaults: FixtureDefaults,
}

impl FixtureDescriptor {
    fn new(name: &str, system: System) -> Self {
        FixtureDescriptor {
            name: name.to_string(),
            system,
            expected: BTreeMap::new(),
            notes: Vec::new(),
            defaults: FixtureDefaults::default(),
        }
    }

    fn expect(mut self, pairs: &[(Detector, Status)]) -> Self {
        self.expected.extend(pairs.iter().copied());
        self
    }

    fn note(mut self, text: &str) -> Self {
        self.notes.push(text.to_string());
        self
    }

    fn defaults(mut self, f: impl FnOnce(&mut FixtureDefaults)) -> Self {
        f(&mut self.defaults);
        self
    }

    /// The fixture's default sample.
    pub fn sample(&self, count: usize, seed: u64) -> Vec<Point> {
        self.system.space().sample(count, seed, &self.defaults.region)
    }

    /// The sample for detectors other than the window search.
    pub fn structural_sample(&self, count: usize, seed: u64) -> Vec<Point> {
        let region = self
            .defaults
            .structural_region
            .as_ref()
            .unwrap_or(&self.defaults.region);
        self.system.space().sample(count, seed, region)
    }
}

fn angle_map(alpha: f64) -> impl Fn(&Point) -> Point + Send + Sync + Clone {
    move |p| match p {
        Point::Angle(t) => Point::Angle(wrap_angle(t + alpha)),
        o => *o,
    }
}

/// Rotation of the circle by `2π·alpha`.
pub fn circle_rotation(alpha: f64) -> System {
    let a = TAU * alpha;
    System::new(
        format!("circle rotation by 2π·{alpha}"),
        Space::circle(),
        angle_map(a),
        angle_map(-a),
    )
    .isometric()
}

fn planar_linear(m: [[f64; 2]; 2]) -> impl Fn(&Point) -> Point + Send + Sync {
    move |p| match p {
        Point::Planar(z) => Point::Planar([m[0][0] * z[0] + m[0][1] * z[1], m[1][0] * z[0] + m[1][1] * z[1]]),
        o => *o,
    }
}

fn rotation_matrix(angle: f64) -> [[f64; 2]; 2] {
    let (s, c) = angle.sin_cos();
    [[c, -s], [s, c]]
}

/// Rotation of the plane about the origin by `angle`.
pub fn plane_rotation(angle: f64) -> System {
    System::new(
        format!("plane rotation by {angle}"),
        Space::plane(),
        planar_linear(rotation_matrix(angle)),
        planar_linear(rotation_matrix(-angle)),
    )
    .isometric()
}

/// `(r, θ) ↦ (r, θ + r)` on the closed unit disk.
pub fn disk_twist() -> System {
    let twist = |sign: f64| {
        move |p: &Point| match p {
            Point::Planar(z) => {
                let r = z[0].hypot(z[1]);
                let (s, c) = (sign * r).sin_cos();
                Point::Planar([c * z[0] - s * z[1], s * z[0] + c * z[1]])
            }
            o => *o,
        }
    };
    System::new("disk twist", Space::disk(1.0), twist(1.0), twist(-1.0))
}

/// `S R S⁻¹` with `S = diag(1, 2)` and `R` the golden plane rotation.
pub fn conjugated_rotation() -> System {
    let conj = |angle: f64| {
        let r = rotation_matrix(angle);
        [[r[0][0], r[0][1] / 2.0], [2.0 * r[1][0], r[1][1]]]
    };
    let a = TAU * GOLDEN;
    System::new(
        "conjugated rotation",
        Space::plane(),
        planar_linear(conj(a)),
        planar_linear(conj(-a)),
    )
}

pub fn plane_translation() -> System {
    let shift = |dx: f64| {
        move |p: &Point| match p {
            Point::Planar(z) => Point::Planar([z[0] + dx, z[1]]),
            o => *o,
        }
    };
    System::new("plane translation", Space::plane(), shift(1.0), shift(-1.0)).isometric()
}

/// `f_n(k) = 2k` for `k <= n`, `2(k - n) - 1` for `n < k <= 2n`, and `k`
/// beyond: a bijection of the positive integers agreeing with doubling up to `n`.
pub fn bijection(n: i64, k: i64) -> i64 {
    if k <= n {
        2 * k
    } else if k <= 2 * n {
        2 * (k - n) - 1
    } else {
        k
    }
}

pub fn bijection_inverse(n: i64, m: i64) -> i64 {
    if m > 2 * n {
        m
    } else if m % 2 == 0 {
        m / 2
    } else {
        (m + 1) / 2 + n
    }
}

/// The discrete system `f_n`.
pub fn discrete_bijection(n: i64) -> System {
    let lift = move |f: fn(i64, i64) -> i64| {
        move |p: &Point| match p {
            Point::Integer(k) if *k >= 1 => Point::Integer(f(n, *k)),
            o => *o,
        }
    };
    System::new(
        format!("f_{n}"),
        Space::discrete(),
        lift(bijection),
        lift(bijection_inverse),
    )
    .isometric()
}

/// The orbit `{h^k(0) : |k| <= budget}` of an irrational rotation.
struct OrbitSubset {
    alpha: f64,
    sorted: Vec<f64>,
}

impl OrbitSubset {
    const TOL: f64 = 1e-9;

    fn new(alpha: f64, budget: i64) -> Self {
        let mut sorted: Vec<f64> = (-budget..=budget).map(|k| wrap_angle(k as f64 * alpha)).collect();
        sorted.sort_by(f64::total_cmp);
        OrbitSubset { alpha, sorted }
    }

    fn nearest(&self, t: f64) -> f64 {
        let t = wrap_angle(t);
        let i = self.sorted.partition_point(|&a| a < t);
        let n = self.sorted.len();
        [self.sorted[i % n], self.sorted[(i + n - 1) % n]]
            .into_iter()
            .min_by(|a, b| arc_distance(*a, t).total_cmp(&arc_distance(*b, t)))
            .expect("nonempty orbit")
    }
}

impl Subspace for OrbitSubset {
    fn contains(&self, p: &Point) -> bool {
        match p {
            Point::Angle(t) => arc_distance(self.nearest(*t), *t) <= Self::TOL,
            _ => false,
        }
    }

    fn snap(&self, p: &Point) -> Option<Point> {
        match p {
            Point::Angle(t) => Some(Point::Angle(self.nearest(*t))),
            _ => None,
        }
    }

    fn sample(&self, count: usize, rng: &mut ChaCha8Rng) -> Vec<Point> {
        (0..count)
            .map(|_| Point::Angle(wrap_angle(rng.gen_range(-1000i64..=1000) as f64 * self.alpha)))
            .collect()
    }

    fn describe(&self) -> String {
        format!(
            "orbit of 0 under rotation by {} ({} points)",
            self.alpha,
            self.sorted.len()
        )
    }
}

/// Circles at heights `1/n` plus the single point `(0, θ)`.
struct ShrinkingCircles {
    circles: u32,
    theta: f64,
}

impl ShrinkingCircles {
    const TOL: f64 = 1e-9;

    fn nearest_height(&self, h: f64) -> f64 {
        let mut best = 0.0;
        for n in 1..=self.circles {
            let c = 1.0 / n as f64;
            if (c - h).abs() < (best - h).abs() {
                best = c;
            }
        }
        best
    }
}

impl Subspace for ShrinkingCircles {
    fn contains(&self, p: &Point) -> bool {
        match p {
            Point::Cylinder { height, angle } => {
                if height.abs() <= Self::TOL {
                    arc_distance(*angle, self.theta) <= Self::TOL
                } else {
                    (self.nearest_height(*height) - height).abs() <= Self::TOL
                }
            }
            _ => false,
        }
    }

    fn snap(&self, p: &Point) -> Option<Point> {
        match p {
            Point::Cylinder { height, angle } => {
                let h = self.nearest_height(*height);
                Some(if h == 0.0 {
                    Point::Cylinder {
                        height: 0.0,
                        angle: self.theta,
                    }
                } else {
                    Point::Cylinder {
                        height: h,
                        angle: *angle,
                    }
                })
            }
            _ => None,
        }
    }

    fn sample(&self, count: usize, rng: &mut ChaCha8Rng) -> Vec<Point> {
        let mut out = vec![Point::Cylinder {
            height: 0.0,
            angle: self.theta,
        }];
        while out.len() < count {
            let n = rng.gen_range(1..=self.circles);
            out.push(Point::Cylinder {
                height: 1.0 / n as f64,
                angle: rng.gen::<f64>() * TAU,
            });
        }
        out.truncate(count);
        out
    }

    fn describe(&self) -> String {
        format!("{} circles at heights 1/n plus (0, {})", self.circles, self.theta)
    }
}

/// The circle at height `h` turns by `h` radians; height 0 is fixed.
pub fn shrinking_circles(theta: f64) -> System {
    let turn = |sign: f64| {
        move |p: &Point| match p {
            Point::Cylinder { height, angle } => Point::Cylinder {
                height: *height,
                angle: wrap_angle(angle + sign * height),
            },
            o => *o,
        }
    };
    let space = Space::cylinder().with_subspace(Arc::new(ShrinkingCircles {
        circles: SHRINKING_CIRCLES,
        theta,
    }));
    System::new("shrinking circles", space, turn(1.0), turn(-1.0))
}

pub fn dense_circle_subset() -> System {
    let a = TAU * GOLDEN;
    let space = Space::circle().with_subspace(Arc::new(OrbitSubset::new(a, DENSE_INDEX_BUDGET)));
    System::new("golden rotation on the orbit of 0", space, angle_map(a), angle_map(-a)).isometric()
}

/// Independent rotations of two unit circles at distance 1 from each other.
pub fn finite_product_rotations() -> System {
    let alphas = [TAU * GOLDEN, TAU * (2f64.sqrt() - 1.0)];
    let turn = move |sign: f64| {
        move |p: &Point| match p {
            Point::Tagged { component, angle } => Point::Tagged {
                component: *component,
                angle: wrap_angle(angle + sign * alphas[(*component as usize).min(1)]),
            },
            o => *o,
        }
    };
    System::new(
        "two independent circle rotations",
        Space::circle_union(2),
        turn(1.0),
        turn(-1.0),
    )
    .isometric()
}

pub fn identity() -> System {
    System::new("identity", Space::plane(), |p| *p, |p| *p).isometric()
}

/// Rotation number from `p/q`, `golden`, or a decimal.
fn parse_rotation(arg: &str) -> Option<(f64, Option<u64>)> {
    let arg = arg.trim();
    if arg == "golden" {
        return Some((GOLDEN, None));
    }
    if let Some((p, q)) = arg.split_once('/') {
        let (p, q): (i64, u64) = (p.trim().parse().ok()?, q.trim().parse().ok()?);
        if q == 0 {
            return None;
        }
        return Some((p as f64 / q as f64, Some(q)));
    }
    arg.parse::<f64>().ok().filter(|a| a.is_finite()).map(|a| (a, None))
}

use Detector::*;
use Status::{Certified as C, Refuted as R};

fn rotation_fixture(name: &str, alpha: f64, period: Option<u64>) -> FixtureDescriptor {
    let mut f = FixtureDescriptor::new(name, circle_rotation(alpha)).expect(&[
        (AlmostPeriod, C),
        (Equicontinuity, C),
        (CompactlyAlmostPeriodic, C),
        (InvariantIsometry, C),
        (CompactClosure, C),
    ]);
    if let Some(q) = period {
        f = f.note(&format!("finite order {q}")).defaults(|d| d.epsilon = 1e-3);
    }
    f
}

/// Look up a registered fixture. Circle rotations accept `circle_rotation:p/q`,
/// `circle_rotation:golden` or `circle_rotation:<decimal>`, with `:` or a space.
pub fn fixture(name: &str) -> Result<FixtureDescriptor> {
    let unknown = || Error::UnknownFixture {
        name: name.to_string(),
        available: NAMES.join(", "),
    };
    let trimmed = name.trim();
    if let Some(rest) = trimmed.strip_prefix("circle_rotation") {
        let arg = rest.trim_start_matches([':', ' ']);
        let arg = if arg.is_empty() { "golden" } else { arg };
        let (alpha, period) = parse_rotation(arg).ok_or_else(unknown)?;
        return Ok(rotation_fixture(trimmed, alpha, period));
    }
    let f = match trimmed {
        "dense_circle_subset" => FixtureDescriptor::new(trimmed, dense_circle_subset())
            .expect(&[(AlmostPeriod, C), (Equicontinuity, C), (CompactlyAlmostPeriodic, R)])
            .note("the space is the golden-rotation orbit of 0, known up to a finite index budget")
            .defaults(|d| {
                d.compactum_points = 4;
            }),
        "finite_product_rotations" => FixtureDescriptor::new(trimmed, finite_product_rotations())
            .expect(&[
                (AlmostPeriod, C),
                (Equicontinuity, C),
                (CompactlyAlmostPeriodic, C),
                (InvariantIsometry, C),
                (CompactClosure, C),
            ])
            .note("finite analogue of an uncountable disjoint union of rotated circles")
            .defaults(|d| {
                d.epsilon = 0.3;
                d.window_max = 20_000;
                d.span = 100_000;
            }),
        "discrete_bijections" => FixtureDescriptor::new(trimmed, discrete_bijection(BIJECTION_N))
            .expect(&[
                (Equicontinuity, C),
                (CompactlyAlmostPeriodic, C),
                (InvariantIsometry, C),
            ])
            .note("f_n agrees with doubling on 1..=n; the sequence converges to a non-surjective map")
            .defaults(|d| {
                d.epsilon = 0.5;
                d.sample = 100;
                d.eq_points = 16;
            }),
        "shrinking_circles" => FixtureDescriptor::new(trimmed, shrinking_circles(0.0))
            .expect(&[(CompactlyAlmostPeriodic, R)])
            .note("circles at heights 1/n for n <= 64 plus the fixed point (0, 0)")
            .defaults(|d| {
                d.compactum = Some(
                    std::iter::once(Point::Cylinder {
                        height: 0.0,
                        angle: 0.0,
                    })
                    .chain((1..=SHRINKING_CIRCLES).map(|n| Point::Cylinder {
                        height: 1.0 / n as f64,
                        angle: 0.0,
                    }))
                    .collect(),
                );
            }),
        "disk_twist" => FixtureDescriptor::new(trimmed, disk_twist())
            .expect(&[(AlmostPeriod, R), (Equicontinuity, R), (CompactlyAlmostPeriodic, R)])
            .defaults(|d| {
                d.sample = 512;
                d.eq_budget = 10_000;
                d.closure_budget = 2_000;
            }),
        "plane_irrational_rotation" => FixtureDescriptor::new(trimmed, plane_rotation(TAU * GOLDEN))
            .expect(&[
                (AlmostPeriod, R),
                (AlmostPeriodChordal, C),
                (Equicontinuity, C),
                (CompactlyAlmostPeriodic, C),
                (CompactlyAlmostPeriodicChordal, C),
                (InvariantIsometry, C),
            ])
            .note("window search samples the disk of radius 100; structural detectors use |z| <= 2")
            .defaults(|d| {
                d.region = Region::Ball { radius: 100.0 };
                d.window_max = 100;
                d.structural_region = Some(Region::Ball { radius: 2.0 });
                d.margin_fraction = 0.1;
            }),
        "conjugated_rotation" => FixtureDescriptor::new(trimmed, conjugated_rotation())
            .expect(&[
                (Equicontinuity, C),
                (CompactlyAlmostPeriodic, C),
                (InvariantIsometry, C),
            ])
            .defaults(|d| d.region = Region::Ball { radius: 2.0 }),
        "plane_translation" => FixtureDescriptor::new(trimmed, plane_translation())
            .expect(&[(AlmostPeriod, R), (CompactlyAlmostPeriodic, R)])
            .defaults(|d| {
                d.window_max = 100;
                d.span = 1_000;
            }),
        "annulus_rotation" => FixtureDescriptor::new(trimmed, plane_rotation(TAU * GOLDEN))
            .expect(&[
                (Equicontinuity, C),
                (CompactlyAlmostPeriodic, C),
                (InvariantIsometry, C),
            ])
            .defaults(|d| d.region = Region::Radii(vec![1.0, 1.5, 2.0])),
        "identity" => FixtureDescriptor::new(trimmed, identity())
            .expect(&[
                (AlmostPeriod, C),
                (Equicontinuity, C),
                (CompactlyAlmostPeriodic, C),
                (InvariantIsometry, C),
                (CompactClosure, C),
            ])
            .note("epsilon below the sample's separation, so every fixed point is its own class")
            .defaults(|d| {
                d.region = Region::Ball { radius: 1.0 };
                d.epsilon = 1e-3;
            }),
        _ => return Err(unknown()),
    };
    Ok(f)
}
