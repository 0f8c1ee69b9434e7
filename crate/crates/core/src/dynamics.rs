//! Homeomorphisms, their iterates, and ε-net approximations of orbit closures.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric_core::{hausdorff_points, nearest, FiniteCompactum, Point, Space};

pub type PointMap = Arc<dyn Fn(&Point) -> Point + Send + Sync>;

/// Trailing quiet window, in enumerated iterates per net point, required
/// before an orbit closure is declared stabilized.
pub const PATIENCE_PER_NET_POINT: usize = 10;

/// Default divergence factor: an iterate farther than
/// `factor * (1 + |base|)` from its base in an unbounded space is an escape.
pub const DIVERGENCE_FACTOR: f64 = 100.0;

const MAX_ESCAPE_WITNESSES: usize = 8;

/// A homeomorphism of a metric space, given by its forward and inverse maps.
#[derive(Clone)]
pub struct System {
    name: String,
    space: Space,
    forward: PointMap,
    inverse: PointMap,
    isometry: bool,
}

impl fmt::Debug for System {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("System")
            .field("name", &self.name)
            .field("space", &self.space)
            .field("isometry", &self.isometry)
            .finish()
    }
}

impl System {
    pub fn new<F, G>(name: impl Into<String>, space: Space, forward: F, inverse: G) -> Self
    where
        F: Fn(&Point) -> Point + Send + Sync + 'static,
        G: Fn(&Point) -> Point + Send + Sync + 'static,
    {
        System {
            name: name.into(),
            space,
            forward: Arc::new(forward),
            inverse: Arc::new(inverse),
            isometry: false,
        }
    }

    /// Mark the system as a known isometry of its space.
    pub fn isometric(mut self) -> Self {
        self.isometry = true;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn is_isometry(&self) -> bool {
        self.isometry
    }

    pub fn forward(&self, p: &Point) -> Point {
        (self.forward)(p)
    }

    pub fn inverse(&self, p: &Point) -> Point {
        (self.inverse)(p)
    }

    pub(crate) fn forward_map(&self) -> PointMap {
        self.forward.clone()
    }

    pub(crate) fn inverse_map(&self) -> PointMap {
        self.inverse.clone()
    }

    /// One step in direction `sign` (forward when positive).
    #[inline]
    pub fn step(&self, p: &Point, sign: i64) -> Point {
        if sign >= 0 {
            self.forward(p)
        } else {
            self.inverse(p)
        }
    }
}

/// `h^n(x)`, by `|n|` single steps (inverse steps for negative `n`).
pub fn iterate(sys: &System, x: &Point, n: i64) -> Point {
    let sign = n.signum();
    let mut p = *x;
    for _ in 0..n.unsigned_abs() {
        p = sys.step(&p, sign);
    }
    p
}

/// `[h^n(x) for n in n_min..=n_max]`, computed incrementally.
pub fn orbit_segment(sys: &System, x: &Point, n_min: i64, n_max: i64) -> Result<Vec<Point>> {
    if n_min > n_max {
        return Err(Error::InvalidArgument(format!(
            "orbit segment bounds {n_min} > {n_max}"
        )));
    }
    let mut out = Vec::with_capacity((n_max - n_min + 1) as usize);
    let mut p = iterate(sys, x, n_min);
    out.push(p);
    for _ in n_min..n_max {
        p = sys.forward(&p);
        out.push(p);
    }
    Ok(out)
}

/// What an orbit closure was computed from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrbitBase {
    Point(Point),
    Compactum(Vec<Point>),
}

impl OrbitBase {
    pub fn points(&self) -> &[Point] {
        match self {
            OrbitBase::Point(p) => std::slice::from_ref(p),
            OrbitBase::Compactum(ps) => ps,
        }
    }
}

/// The iterate a net point was taken from: `h^n(bases[base])`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IterateTag {
    pub base: usize,
    pub n: i64,
}

/// Finite evidence that an orbit closure is not compact in the space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EscapeWitness {
    /// A tight cluster of distinct iterates whose representative is rejected
    /// by the membership oracle.
    Limit {
        representative: Point,
        members: Vec<(Point, i64)>,
    },
    /// An iterate that left every bounded region considered.
    Divergent {
        base: Point,
        n: i64,
        point: Point,
        distance: f64,
        bound: f64,
    },
}

impl EscapeWitness {
    /// Re-evaluate the witness against `sys`; returns the largest numeric
    /// discrepancy, or an error if the violating relation no longer holds.
    pub fn replay(&self, sys: &System) -> Result<f64> {
        let space = sys.space();
        match self {
            EscapeWitness::Limit {
                representative,
                members,
            } => {
                let pts: Vec<Point> = members.iter().map(|(b, n)| iterate(sys, b, *n)).collect();
                let rep = space
                    .centroid(&pts)
                    .ok_or_else(|| Error::InvalidArgument("empty escape cluster".into()))?;
                if space.contains(&rep) != Some(false) {
                    return Err(Error::InvalidArgument(format!(
                        "escape representative {rep:?} is accepted by the membership oracle"
                    )));
                }
                space.distance(&rep, representative)
            }
            EscapeWitness::Divergent {
                base,
                n,
                point,
                distance,
                bound,
            } => {
                let p = iterate(sys, base, *n);
                let d = space.distance(&p, base)?;
                if d <= *bound {
                    return Err(Error::InvalidArgument(format!(
                        "divergent iterate at distance {d} is within the bound {bound}"
                    )));
                }
                Ok(space.distance(&p, point)?.max((d - distance).abs()))
            }
        }
    }
}

/// ε-net approximation of an orbit closure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitClosureApprox {
    pub net: FiniteCompactum,
    /// The iterate each net point was taken from, aligned with `net`.
    pub tags: Vec<IterateTag>,
    pub base: OrbitBase,
    /// Largest `m` such that every `h^n(base)` with `|n| <= m` was enumerated.
    pub iterates_used: usize,
    pub stabilized: bool,
    pub escape_witnesses: Vec<EscapeWitness>,
}

impl OrbitClosureApprox {
    pub fn is_compact_evidence(&self) -> bool {
        self.stabilized && self.escape_witnesses.is_empty()
    }
}

fn magnitude(p: &Point) -> f64 {
    match p {
        Point::Planar(q) => q[0].hypot(q[1]),
        Point::Cylinder { height, .. } => height.abs(),
        _ => 0.0,
    }
}

fn validate(eps: f64, budget: usize, patience: usize) -> Result<()> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon {eps} must be positive")));
    }
    if patience == 0 || budget < patience {
        return Err(Error::InvalidArgument(format!(
            "need budget >= patience >= 1 (budget {budget}, patience {patience})"
        )));
    }
    Ok(())
}

struct Cluster {
    members: Vec<(Point, i64, Point)>,
    done: bool,
}

fn closure_engine(
    sys: &System,
    bases: &[Point],
    eps: f64,
    budget: usize,
    patience: usize,
) -> Result<OrbitClosureApprox> {
    validate(eps, budget, patience)?;
    if bases.is_empty() {
        return Err(Error::InvalidArgument("orbit closure of an empty set".into()));
    }
    let space = sys.space();
    for b in bases {
        space.check_point(b)?;
    }
    let track_clusters = space.has_membership();
    let cluster_radius = eps / 8.0;
    let mut net: Vec<Point> = Vec::new();
    let mut tags: Vec<IterateTag> = Vec::new();
    let mut clusters: Vec<Cluster> = Vec::new();
    let mut escapes: Vec<EscapeWitness> = Vec::new();

    let visit = |p: Point,
                 tag: IterateTag,
                 net: &mut Vec<Point>,
                 tags: &mut Vec<IterateTag>,
                 escapes: &mut Vec<EscapeWitness>,
                 clusters: &mut Vec<Cluster>|
     -> Result<bool> {
        let (idx, d) = if net.is_empty() {
            (0, f64::INFINITY)
        } else {
            nearest(space, &p, net)?
        };
        if d > eps {
            net.push(p);
            tags.push(tag);
            if track_clusters {
                clusters.push(Cluster {
                    members: Vec::new(),
                    done: false,
                });
            }
            return Ok(true);
        }
        // Only forward iterates join clusters: backward iterates mirror the
        // forward returns about the net point and pull the centroid onto it.
        if track_clusters && tag.n > 0 && d <= cluster_radius {
            let c = &mut clusters[idx];
            if !c.done {
                c.members.push((bases[tag.base], tag.n, p));
                if c.members.len() >= patience {
                    c.done = true;
                    let pts: Vec<Point> = c.members.iter().map(|m| m.2).collect();
                    if let Some(rep) = space.centroid(&pts) {
                        if space.contains(&rep) == Some(false) && escapes.len() < MAX_ESCAPE_WITNESSES {
                            escapes.push(EscapeWitness::Limit {
                                representative: rep,
                                members: c.members.iter().map(|m| (m.0, m.1)).collect(),
                            });
                        }
                    }
                }
            }
        }
        Ok(false)
    };

    for (i, b) in bases.iter().enumerate() {
        visit(
            *b,
            IterateTag { base: i, n: 0 },
            &mut net,
            &mut tags,
            &mut escapes,
            &mut clusters,
        )?;
    }

    let bounds: Vec<f64> = bases.iter().map(|b| DIVERGENCE_FACTOR * (1.0 + magnitude(b))).collect();
    let mut fwd = bases.to_vec();
    let mut bwd = bases.to_vec();
    let mut quiet = 0usize;
    let mut used = 0usize;
    let mut stabilized = false;
    'outer: for m in 1..=budget {
        for (sign, states) in [(1i64, &mut fwd), (-1i64, &mut bwd)] {
            for (i, state) in states.iter_mut().enumerate() {
                let p = sys.step(state, sign);
                *state = p;
                let n = sign * m as i64;
                if space.is_unbounded() {
                    let dist = space.distance(&p, &bases[i])?;
                    if dist > bounds[i] {
                        escapes.push(EscapeWitness::Divergent {
                            base: bases[i],
                            n,
                            point: p,
                            distance: dist,
                            bound: bounds[i],
                        });
                        used = m - 1;
                        break 'outer;
                    }
                }
                if visit(
                    p,
                    IterateTag { base: i, n },
                    &mut net,
                    &mut tags,
                    &mut escapes,
                    &mut clusters,
                )? {
                    quiet = 0;
                } else {
                    quiet += 1;
                }
            }
        }
        used = m;
        if !escapes.is_empty() {
            break;
        }
        let clusters_settled = !track_clusters || clusters.iter().all(|c| c.done);
        if clusters_settled && quiet >= patience.max(PATIENCE_PER_NET_POINT * net.len()) {
            stabilized = true;
            break;
        }
    }

    let base = if bases.len() == 1 {
        OrbitBase::Point(bases[0])
    } else {
        OrbitBase::Compactum(bases.to_vec())
    };
    Ok(OrbitClosureApprox {
        net: FiniteCompactum::new(net, eps)?,
        tags,
        base,
        iterates_used: used,
        stabilized,
        escape_witnesses: escapes,
    })
}

/// ε-net of `{h^n(x) : |n| <= m}`, grown with `n` and `-n` interleaved until
/// the net stops growing for a trailing quiet window or the budget runs out.
///
/// The quiet window is `max(patience, 10 * net size)` enumerated iterates.
/// With a membership oracle, every net point must also have collected
/// `patience` iterates within `eps / 8`, whose centroid is tested for
/// membership. Enumeration stops at the first escape witness.
pub fn orbit_closure_approx(
    sys: &System,
    x: &Point,
    eps: f64,
    budget: usize,
    patience: usize,
) -> Result<OrbitClosureApprox> {
    closure_engine(sys, std::slice::from_ref(x), eps, budget, patience)
}

/// Same contract as [`orbit_closure_approx`], for the union of the orbits of
/// every point of `b`.
pub fn compactum_orbit_closure(
    sys: &System,
    b: &FiniteCompactum,
    eps: f64,
    budget: usize,
    patience: usize,
) -> Result<OrbitClosureApprox> {
    closure_engine(sys, b.points(), eps, budget, patience)
}

/// Hausdorff distance between `h(A)` and `A`.
pub fn check_invariance(sys: &System, a: &FiniteCompactum) -> Result<f64> {
    let image: Vec<Point> = a.points().iter().map(|p| sys.forward(p)).collect();
    hausdorff_points(sys.space(), &image, a.points())
}
