//! Metric spaces, finite compacta and the distances between them.
//!
//! Points carry a per-space representation (an angle on the circle, a
//! Cartesian pair in the plane, an integer in a discrete space, ...) so each
//! built-in metric is evaluated by its closed form rather than through a
//! generic embedding.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::compactify::{chordal_distance, SpherePoint};
use crate::error::{Error, Result};
use crate::group_closure::MapSnapshot;

/// Absolute tolerance for assertions that hold exactly in real arithmetic.
pub const EXACT_TOL: f64 = 1e-12;

/// A point, represented in the coordinates of the space that owns it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Point {
    /// Angle in `[0, 2π)` on the unit circle.
    Angle(f64),
    /// Cartesian pair in the plane or a disk.
    Planar([f64; 2]),
    /// Element of a discrete space.
    Integer(i64),
    /// Point of the one-point compactification of the plane.
    Sphere(SpherePoint),
    /// Point on one circle of a disjoint union of circles.
    Tagged { component: u32, angle: f64 },
    /// Point of `R × S¹`.
    Cylinder { height: f64, angle: f64 },
    /// Point of the torus `S¹ × S¹`.
    Torus([f64; 2]),
}

impl Point {
    pub fn planar(x: f64, y: f64) -> Self {
        Point::Planar([x, y])
    }

    pub fn polar(r: f64, theta: f64) -> Self {
        Point::Planar([r * theta.cos(), r * theta.sin()])
    }

    pub fn as_planar(&self) -> Option<[f64; 2]> {
        match self {
            Point::Planar(p) => Some(*p),
            Point::Sphere(SpherePoint::Finite(p)) => Some(*p),
            _ => None,
        }
    }
}

/// Reduce an angle to `[0, 2π)`.
pub fn wrap_angle(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Arc-length distance between two angles on the unit circle.
pub fn arc_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).abs().rem_euclid(TAU);
    d.min(TAU - d).max(0.0)
}

fn chord_from_arc(arc: f64) -> f64 {
    2.0 * (arc / 2.0).sin()
}

/// Symbolic dimension tag of a space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DimDescriptor {
    Circle,
    Plane,
    Disk,
    Sphere,
    Discrete,
    Product,
    DisjointUnion,
    Subspace,
}

/// Ambient metric geometry of a space.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SpaceKind {
    /// Unit circle with the arc-length metric.
    Circle,
    /// Euclidean plane.
    Plane,
    /// Closed Euclidean disk about the origin.
    Disk { radius: f64 },
    /// Plane plus ∞ with the chordal metric.
    Sphere,
    /// Integers with `d(m, n) = 1` iff `m ≠ n`.
    Discrete,
    /// `S¹ × S¹` with the max of the two arc metrics.
    Torus,
    /// Disjoint union of unit circles (chord metric inside, distance 1 across).
    CircleUnion { components: u32 },
    /// `R × S¹ ⊂ R³` with the Euclidean metric of the embedding.
    Cylinder,
}

impl SpaceKind {
    fn label(&self) -> &'static str {
        match self {
            SpaceKind::Circle => "circle",
            SpaceKind::Plane => "plane",
            SpaceKind::Disk { .. } => "disk",
            SpaceKind::Sphere => "sphere",
            SpaceKind::Discrete => "discrete",
            SpaceKind::Torus => "torus",
            SpaceKind::CircleUnion { .. } => "circle union",
            SpaceKind::Cylinder => "cylinder",
        }
    }
}

/// A subset of an ambient space described by a membership oracle.
pub trait Subspace: Send + Sync {
    fn contains(&self, p: &Point) -> bool;

    /// A point of the subspace near `p`, used to place probes inside it.
    fn snap(&self, p: &Point) -> Option<Point>;

    fn sample(&self, count: usize, rng: &mut ChaCha8Rng) -> Vec<Point>;

    fn describe(&self) -> String;
}

/// Where random sample points are drawn from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    Default,
    /// Planar points uniform in the disk of this radius.
    Ball {
        radius: f64,
    },
    /// Planar points uniform in an annulus.
    Annulus {
        inner: f64,
        outer: f64,
    },
    /// Planar points on the given circles about the origin, cycling through radii.
    Radii(Vec<f64>),
}

/// A metric space descriptor: geometry, optional membership oracle, sampler.
#[derive(Clone)]
pub struct Space {
    kind: SpaceKind,
    subspace: Option<Arc<dyn Subspace>>,
}

impl fmt::Debug for Space {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = f.debug_struct("Space");
        s.field("kind", &self.kind);
        if let Some(sub) = &self.subspace {
            s.field("subspace", &sub.describe());
        }
        s.finish()
    }
}

impl Space {
    pub fn new(kind: SpaceKind) -> Self {
        Space { kind, subspace: None }
    }

    pub fn circle() -> Self {
        Self::new(SpaceKind::Circle)
    }

    pub fn plane() -> Self {
        Self::new(SpaceKind::Plane)
    }

    pub fn disk(radius: f64) -> Self {
        Self::new(SpaceKind::Disk { radius })
    }

    pub fn sphere() -> Self {
        Self::new(SpaceKind::Sphere)
    }

    pub fn discrete() -> Self {
        Self::new(SpaceKind::Discrete)
    }

    pub fn torus() -> Self {
        Self::new(SpaceKind::Torus)
    }

    pub fn circle_union(components: u32) -> Self {
        Self::new(SpaceKind::CircleUnion { components })
    }

    pub fn cylinder() -> Self {
        Self::new(SpaceKind::Cylinder)
    }

    pub fn with_subspace(mut self, subspace: Arc<dyn Subspace>) -> Self {
        self.subspace = Some(subspace);
        self
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    pub fn descriptor(&self) -> DimDescriptor {
        if self.subspace.is_some() {
            return DimDescriptor::Subspace;
        }
        match self.kind {
            SpaceKind::Circle => DimDescriptor::Circle,
            SpaceKind::Plane => DimDescriptor::Plane,
            SpaceKind::Disk { .. } => DimDescriptor::Disk,
            SpaceKind::Sphere => DimDescriptor::Sphere,
            SpaceKind::Discrete => DimDescriptor::Discrete,
            SpaceKind::Torus | SpaceKind::Cylinder => DimDescriptor::Product,
            SpaceKind::CircleUnion { .. } => DimDescriptor::DisjointUnion,
        }
    }

    pub fn has_membership(&self) -> bool {
        self.subspace.is_some()
    }

    /// `None` when the space carries no membership oracle.
    pub fn contains(&self, p: &Point) -> Option<bool> {
        self.subspace.as_ref().map(|s| s.contains(p))
    }

    /// True for spaces of infinite diameter.
    pub fn is_unbounded(&self) -> bool {
        matches!(self.kind, SpaceKind::Plane | SpaceKind::Cylinder)
    }

    fn incompatible(&self, p: &Point) -> Error {
        Error::IncompatiblePoint {
            space: self.kind.label(),
            point: *p,
        }
    }

    pub fn check_point(&self, p: &Point) -> Result<()> {
        let ok = matches!(
            (self.kind, p),
            (SpaceKind::Circle, Point::Angle(_))
                | (SpaceKind::Plane, Point::Planar(_))
                | (SpaceKind::Disk { .. }, Point::Planar(_))
                | (SpaceKind::Sphere, Point::Sphere(_))
                | (SpaceKind::Discrete, Point::Integer(_))
                | (SpaceKind::Torus, Point::Torus(_))
                | (SpaceKind::CircleUnion { .. }, Point::Tagged { .. })
                | (SpaceKind::Cylinder, Point::Cylinder { .. })
        );
        if ok {
            Ok(())
        } else {
            Err(self.incompatible(p))
        }
    }

    /// The metric of the space.
    pub fn distance(&self, p: &Point, q: &Point) -> Result<f64> {
        use Point::*;
        let d = match (self.kind, p, q) {
            (SpaceKind::Circle, Angle(a), Angle(b)) => arc_distance(*a, *b),
            (SpaceKind::Plane | SpaceKind::Disk { .. }, Planar(a), Planar(b)) => (a[0] - b[0]).hypot(a[1] - b[1]),
            (SpaceKind::Sphere, Sphere(a), Sphere(b)) => chordal_distance(a, b),
            (SpaceKind::Discrete, Integer(m), Integer(n)) => {
                if m == n {
                    0.0
                } else {
                    1.0
                }
            }
            (SpaceKind::Torus, Torus(a), Torus(b)) => arc_distance(a[0], b[0]).max(arc_distance(a[1], b[1])),
            (SpaceKind::CircleUnion { .. }, Tagged { component: i, angle: a }, Tagged { component: j, angle: b }) => {
                if i == j {
                    chord_from_arc(arc_distance(*a, *b))
                } else {
                    1.0
                }
            }
            (SpaceKind::Cylinder, Cylinder { height: h1, angle: a }, Cylinder { height: h2, angle: b }) => {
                (h1 - h2).hypot(chord_from_arc(arc_distance(*a, *b)))
            }
            _ => {
                self.check_point(p)?;
                return Err(self.incompatible(q));
            }
        };
        Ok(d)
    }

    /// Deterministic random sample of `count` points.
    pub fn sample(&self, count: usize, seed: u64, region: &Region) -> Vec<Point> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        if let Some(sub) = &self.subspace {
            return sub.sample(count, &mut rng);
        }
        let planar = |rng: &mut ChaCha8Rng, k: usize| -> [f64; 2] {
            match region {
                Region::Ball { radius } => {
                    let r = radius * rng.gen::<f64>().sqrt();
                    let t = rng.gen::<f64>() * TAU;
                    [r * t.cos(), r * t.sin()]
                }
                Region::Annulus { inner, outer } => {
                    let u: f64 = rng.gen();
                    let r = (inner * inner + u * (outer * outer - inner * inner)).sqrt();
                    let t = rng.gen::<f64>() * TAU;
                    [r * t.cos(), r * t.sin()]
                }
                Region::Radii(radii) if !radii.is_empty() => {
                    let r = radii[k % radii.len()];
                    let t = rng.gen::<f64>() * TAU;
                    [r * t.cos(), r * t.sin()]
                }
                _ => {
                    let radius = match self.kind {
                        SpaceKind::Disk { radius } => radius,
                        _ => 1.0,
                    };
                    let r = radius * rng.gen::<f64>().sqrt();
                    let t = rng.gen::<f64>() * TAU;
                    [r * t.cos(), r * t.sin()]
                }
            }
        };
        (0..count)
            .map(|k| match self.kind {
                SpaceKind::Circle => Point::Angle(rng.gen::<f64>() * TAU),
                SpaceKind::Plane | SpaceKind::Disk { .. } => Point::Planar(planar(&mut rng, k)),
                SpaceKind::Sphere => Point::Sphere(SpherePoint::Finite(planar(&mut rng, k))),
                SpaceKind::Discrete => Point::Integer(k as i64 + 1),
                SpaceKind::Torus => Point::Torus([rng.gen::<f64>() * TAU, rng.gen::<f64>() * TAU]),
                SpaceKind::CircleUnion { components } => Point::Tagged {
                    component: rng.gen_range(0..components.max(1)),
                    angle: rng.gen::<f64>() * TAU,
                },
                SpaceKind::Cylinder => Point::Cylinder {
                    height: rng.gen::<f64>() * 2.0 - 1.0,
                    angle: rng.gen::<f64>() * TAU,
                },
            })
            .collect()
    }

    /// Probe points at distance approximately `delta` from `x`, restricted to
    /// the space. An empty result means the `delta`-ball about `x` contains
    /// no other point of the space.
    pub fn ring(&self, x: &Point, delta: f64, count: usize) -> Vec<Point> {
        let count = count.max(1);
        let dirs = |n: usize| (0..n).map(move |j| TAU * j as f64 / n as f64);
        let raw: Vec<Point> = match (self.kind, *x) {
            (SpaceKind::Circle, Point::Angle(a)) => {
                if delta >= PI {
                    vec![Point::Angle(wrap_angle(a + PI))]
                } else {
                    vec![Point::Angle(wrap_angle(a + delta)), Point::Angle(wrap_angle(a - delta))]
                }
            }
            (SpaceKind::Plane, Point::Planar(p)) => dirs(count)
                .map(|t| Point::Planar([p[0] + delta * t.cos(), p[1] + delta * t.sin()]))
                .collect(),
            (SpaceKind::Disk { radius }, Point::Planar(p)) => dirs(count)
                .map(|t| [p[0] + delta * t.cos(), p[1] + delta * t.sin()])
                .filter(|q| q[0].hypot(q[1]) <= radius + EXACT_TOL)
                .map(Point::Planar)
                .collect(),
            (SpaceKind::Sphere, Point::Sphere(s)) => crate::compactify::sphere_ring(&s, delta, count),
            (SpaceKind::Discrete, Point::Integer(n)) => {
                if delta >= 1.0 {
                    vec![Point::Integer(n + 1), Point::Integer(n - 1)]
                } else {
                    Vec::new()
                }
            }
            (SpaceKind::Torus, Point::Torus([a, b])) => {
                let steps = [-delta, 0.0, delta];
                let mut out = Vec::new();
                for da in steps {
                    for db in steps {
                        if da != 0.0 || db != 0.0 {
                            out.push(Point::Torus([wrap_angle(a + da), wrap_angle(b + db)]));
                        }
                    }
                }
                out
            }
            (SpaceKind::CircleUnion { .. }, Point::Tagged { component, angle }) => {
                if delta >= 2.0 {
                    vec![Point::Tagged {
                        component,
                        angle: wrap_angle(angle + PI),
                    }]
                } else {
                    let arc = 2.0 * (delta / 2.0).asin();
                    vec![
                        Point::Tagged {
                            component,
                            angle: wrap_angle(angle + arc),
                        },
                        Point::Tagged {
                            component,
                            angle: wrap_angle(angle - arc),
                        },
                    ]
                }
            }
            (SpaceKind::Cylinder, Point::Cylinder { height, angle }) => dirs(count)
                .map(|t| {
                    let dh = delta * t.cos();
                    let chord = (delta * t.sin()).clamp(-2.0, 2.0);
                    let arc = 2.0 * (chord / 2.0).asin();
                    Point::Cylinder {
                        height: height + dh,
                        angle: wrap_angle(angle + arc),
                    }
                })
                .collect(),
            _ => Vec::new(),
        };
        match &self.subspace {
            None => raw,
            Some(sub) => {
                let mut out: Vec<Point> = Vec::new();
                for q in raw.iter().filter_map(|q| sub.snap(q)) {
                    let fresh = self.distance(&q, x).map(|d| d > 0.0).unwrap_or(false) && out.iter().all(|o| o != &q);
                    if fresh {
                        out.push(q);
                    }
                }
                out
            }
        }
    }

    /// Mean of a tight cluster of points, used as the representative of a
    /// candidate limit point.
    pub fn centroid(&self, points: &[Point]) -> Option<Point> {
        let first = *points.first()?;
        let n = points.len() as f64;
        let circ_mean = |angles: &mut dyn Iterator<Item = f64>| {
            let (s, c) = angles.fold((0.0, 0.0), |(s, c), a| (s + a.sin(), c + a.cos()));
            wrap_angle(s.atan2(c))
        };
        Some(match first {
            Point::Angle(_) => Point::Angle(circ_mean(&mut points.iter().filter_map(|p| match p {
                Point::Angle(a) => Some(*a),
                _ => None,
            }))),
            Point::Planar(_) => {
                let (sx, sy) = points
                    .iter()
                    .filter_map(Point::as_planar)
                    .fold((0.0, 0.0), |(sx, sy), p| (sx + p[0], sy + p[1]));
                Point::Planar([sx / n, sy / n])
            }
            Point::Sphere(_) => {
                if points.iter().any(|p| matches!(p, Point::Sphere(SpherePoint::Infinity))) {
                    Point::Sphere(SpherePoint::Infinity)
                } else {
                    let (sx, sy) = points
                        .iter()
                        .filter_map(Point::as_planar)
                        .fold((0.0, 0.0), |(sx, sy), p| (sx + p[0], sy + p[1]));
                    Point::Sphere(SpherePoint::Finite([sx / n, sy / n]))
                }
            }
            Point::Integer(_) => first,
            Point::Tagged { component, .. } => Point::Tagged {
                component,
                angle: circ_mean(&mut points.iter().filter_map(|p| match p {
                    Point::Tagged { angle, .. } => Some(*angle),
                    _ => None,
                })),
            },
            Point::Cylinder { .. } => {
                let mut hs = 0.0;
                let mut angles = Vec::with_capacity(points.len());
                for p in points {
                    if let Point::Cylinder { height, angle } = p {
                        hs += height;
                        angles.push(*angle);
                    }
                }
                Point::Cylinder {
                    height: hs / n,
                    angle: circ_mean(&mut angles.into_iter()),
                }
            }
            Point::Torus(_) => {
                let a = circ_mean(&mut points.iter().filter_map(|p| match p {
                    Point::Torus(t) => Some(t[0]),
                    _ => None,
                }));
                let b = circ_mean(&mut points.iter().filter_map(|p| match p {
                    Point::Torus(t) => Some(t[1]),
                    _ => None,
                }));
                Point::Torus([a, b])
            }
        })
    }
}

/// Free-function form of [`Space::distance`].
pub fn distance(space: &Space, p: &Point, q: &Point) -> Result<f64> {
    space.distance(p, q)
}

/// A finite point set standing in for a compactum, together with the
/// resolution at which it approximates it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiniteCompactum {
    points: Vec<Point>,
    resolution: f64,
}

impl FiniteCompactum {
    pub fn new(points: Vec<Point>, resolution: f64) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidArgument("a compactum needs at least one point".into()));
        }
        if !(resolution >= 0.0) {
            return Err(Error::InvalidArgument(format!("resolution {resolution} must be >= 0")));
        }
        Ok(FiniteCompactum { points, resolution })
    }

    /// An exact finite set (resolution 0).
    pub fn exact(points: Vec<Point>) -> Result<Self> {
        Self::new(points, 0.0)
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Distance from `p` to the nearest point of `set`, with that point's index.
pub fn nearest(space: &Space, p: &Point, set: &[Point]) -> Result<(usize, f64)> {
    let mut best = (0, f64::INFINITY);
    for (i, q) in set.iter().enumerate() {
        let d = space.distance(p, q)?;
        if d < best.1 {
            best = (i, d);
        }
    }
    if set.is_empty() {
        return Err(Error::InvalidArgument("nearest point of an empty set".into()));
    }
    Ok(best)
}

/// `max_{a ∈ A} min_{b ∈ B} d(a, b)`.
pub fn directed_hausdorff(space: &Space, a: &[Point], b: &[Point]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidArgument("Hausdorff distance of an empty set".into()));
    }
    let mut worst: f64 = 0.0;
    for p in a {
        let (_, d) = nearest(space, p, b)?;
        worst = worst.max(d);
    }
    Ok(worst)
}

/// Hausdorff distance between two finite compacta of `space`.
pub fn hausdorff_distance(space: &Space, a: &FiniteCompactum, b: &FiniteCompactum) -> Result<f64> {
    hausdorff_points(space, a.points(), b.points())
}

pub fn hausdorff_points(space: &Space, a: &[Point], b: &[Point]) -> Result<f64> {
    for p in a.iter().chain(b) {
        space.check_point(p).map_err(|_| {
            Error::DomainMismatch(format!("point {p:?} does not belong to the {:?} space", space.kind()))
        })?;
    }
    Ok(directed_hausdorff(space, a, b)?.max(directed_hausdorff(space, b, a)?))
}

/// Greedy ε-net in input order: a point is kept when it is farther than `eps`
/// from every point kept so far. The result covers the input at radius `eps`
/// and its points are pairwise more than `eps` apart.
pub fn epsilon_net(space: &Space, points: &[Point], eps: f64) -> Result<FiniteCompactum> {
    if points.is_empty() {
        return Err(Error::InvalidArgument("epsilon_net of an empty point list".into()));
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon {eps} must be positive")));
    }
    let mut kept: Vec<Point> = Vec::new();
    for p in points {
        let mut covered = false;
        for q in &kept {
            if space.distance(p, q)? <= eps {
                covered = true;
                break;
            }
        }
        if !covered {
            kept.push(*p);
        }
    }
    FiniteCompactum::new(kept, eps)
}

/// `sup_{x ∈ sample} d(f(x), g(x))` for two snapshots on the same sample.
pub fn sup_map_distance(space: &Space, f: &MapSnapshot, g: &MapSnapshot) -> Result<f64> {
    if !f.shares_sample(g) {
        return Err(Error::DomainMismatch(
            "snapshots are restrictions to different samples".into(),
        ));
    }
    let mut worst: f64 = 0.0;
    for (a, b) in f.values().iter().zip(g.values()) {
        worst = worst.max(space.distance(a, b)?);
    }
    Ok(worst)
}
