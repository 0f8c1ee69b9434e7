//! Partition of a sample into orbit-closure classes, the Hausdorff metric on
//! the quotient, and the group structure of a single orbit closure.

use serde::{Deserialize, Serialize};

use crate::dynamics::{orbit_closure_approx, orbit_segment, OrbitClosureApprox, System};
use crate::error::{Error, Result};
use crate::metric_core::{directed_hausdorff, hausdorff_points, nearest, Point, Space};

/// Tolerance for exact returns in [`classify_class`].
pub const RETURN_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub sample: Vec<Point>,
    pub classes: Vec<OrbitClosureApprox>,
    /// Class id of each sample point.
    pub assignment: Vec<usize>,
    pub epsilon: f64,
}

impl Decomposition {
    pub fn class_count(&self) -> usize {
        self.classes.len()
    }

    pub fn all_stabilized(&self) -> bool {
        self.classes.iter().all(|c| c.stabilized)
    }
}

/// Greedy partition: each unassigned sample point seeds a class, which then
/// absorbs every unassigned point within `ε` of its net.
pub fn decompose(
    sys: &System,
    sample: &[Point],
    epsilon: f64,
    budget: usize,
    patience: usize,
) -> Result<Decomposition> {
    if sample.is_empty() {
        return Err(Error::InvalidArgument("empty sample".into()));
    }
    let space = sys.space();
    let mut assignment: Vec<Option<usize>> = vec![None; sample.len()];
    let mut classes = Vec::new();
    for i in 0..sample.len() {
        if assignment[i].is_some() {
            continue;
        }
        let c = orbit_closure_approx(sys, &sample[i], epsilon, budget, patience)?;
        if let Some(w) = c.escape_witnesses.first() {
            return Err(Error::NonCompact(format!(
                "the orbit closure of {:?} escapes the space: {w:?}",
                sample[i]
            )));
        }
        let id = classes.len();
        assignment[i] = Some(id);
        for j in i + 1..sample.len() {
            if assignment[j].is_none() && nearest(space, &sample[j], c.net.points())?.1 <= epsilon {
                assignment[j] = Some(id);
            }
        }
        classes.push(c);
    }
    Ok(Decomposition {
        sample: sample.to_vec(),
        classes,
        assignment: assignment
            .into_iter()
            .map(|a| a.expect("every point assigned"))
            .collect(),
        epsilon,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuotientDistance {
    pub hausdorff: f64,
    pub min_pair: f64,
    /// `hausdorff - min_pair`.
    pub difference: f64,
}

pub fn quotient_distance(space: &Space, a: &OrbitClosureApprox, b: &OrbitClosureApprox) -> Result<QuotientDistance> {
    let hausdorff = hausdorff_points(space, a.net.points(), b.net.points())?;
    let mut min_pair = f64::INFINITY;
    for p in a.net.points() {
        min_pair = min_pair.min(nearest(space, p, b.net.points())?.1);
    }
    Ok(QuotientDistance {
        hausdorff,
        min_pair,
        difference: hausdorff - min_pair,
    })
}

/// Quotient distances between all class pairs, row-major.
pub fn quotient_matrix(space: &Space, dec: &Decomposition) -> Result<Vec<Vec<QuotientDistance>>> {
    let k = dec.classes.len();
    let mut m = vec![
        vec![
            QuotientDistance {
                hausdorff: 0.0,
                min_pair: 0.0,
                difference: 0.0
            };
            k
        ];
        k
    ];
    for i in 0..k {
        for j in i + 1..k {
            let q = quotient_distance(space, &dec.classes[i], &dec.classes[j])?;
            m[i][j] = q;
            m[j][i] = q;
        }
    }
    Ok(m)
}

/// `max (d_H(π x, π y) - d(x, y))` over index pairs into the sample; points
/// in one class have quotient distance 0.
pub fn check_projection_nonexpansive(space: &Space, dec: &Decomposition, pairs: &[(usize, usize)]) -> Result<f64> {
    let m = quotient_matrix(space, dec)?;
    let mut worst = f64::NEG_INFINITY;
    for &(i, j) in pairs {
        if i >= dec.sample.len() || j >= dec.sample.len() {
            return Err(Error::InvalidArgument(format!("pair ({i}, {j}) outside the sample")));
        }
        let q = m[dec.assignment[i]][dec.assignment[j]].hausdorff;
        worst = worst.max(q - space.distance(&dec.sample[i], &dec.sample[j])?);
    }
    Ok(worst.max(0.0))
}

/// `max_c d(h(net_c), net_c)` in the directed Hausdorff sense.
pub fn class_invariance(sys: &System, dec: &Decomposition) -> Result<f64> {
    let space = sys.space();
    let mut worst: f64 = 0.0;
    for c in &dec.classes {
        let image: Vec<Point> = c.net.points().iter().map(|p| sys.forward(p)).collect();
        worst = worst.max(directed_hausdorff(space, &image, c.net.points())?);
    }
    Ok(worst)
}

/// Multiplication table of an orbit closure net, with `h^a(x) * h^b(x)` the
/// net point nearest `h^{a+b}(x)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupTable {
    /// Iterate index of each net point.
    pub indices: Vec<i64>,
    pub table: Vec<Vec<usize>>,
    /// Net index of the base point.
    pub identity: usize,
    pub residuals: GroupResiduals,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GroupResiduals {
    /// Largest distance from `h^{a+b}(x)` to the net point chosen as product.
    pub closure: f64,
    /// Largest distance between the products `a * b` and `b * a`.
    pub commutativity: f64,
    /// Distance from the identity element to the base point.
    pub identity: f64,
    /// Largest distance from the identity to the nearest `a * b`, over `a`.
    pub inverse: f64,
    /// Whether each row of the table is a permutation of the net.
    pub rows_are_permutations: bool,
}

impl GroupResiduals {
    pub fn worst(&self) -> f64 {
        self.closure
            .max(self.commutativity)
            .max(self.identity)
            .max(self.inverse)
    }
}

pub fn orbit_group_table(sys: &System, x: &Point, epsilon: f64, budget: usize, patience: usize) -> Result<GroupTable> {
    let c = orbit_closure_approx(sys, x, epsilon, budget, patience)?;
    if !c.is_compact_evidence() {
        return Err(Error::NotStabilized { budget });
    }
    let space = sys.space();
    let net = c.net.points();
    let indices: Vec<i64> = c.tags.iter().map(|t| t.n).collect();
    let reach = 2 * indices.iter().map(|n| n.abs()).max().unwrap_or(0);
    let orbit = orbit_segment(sys, x, -reach, reach)?;
    let at = |n: i64| &orbit[(n + reach) as usize];
    let (identity, identity_residual) = nearest(space, x, net)?;
    let k = net.len();
    let mut table = vec![vec![0usize; k]; k];
    let mut r = GroupResiduals {
        identity: identity_residual,
        rows_are_permutations: true,
        ..GroupResiduals::default()
    };
    for a in 0..k {
        for b in 0..k {
            let (p, d) = nearest(space, at(indices[a] + indices[b]), net)?;
            table[a][b] = p;
            r.closure = r.closure.max(d);
        }
    }
    for a in 0..k {
        let mut seen = vec![false; k];
        let mut to_identity = f64::INFINITY;
        for b in 0..k {
            seen[table[a][b]] = true;
            r.commutativity = r
                .commutativity
                .max(space.distance(&net[table[a][b]], &net[table[b][a]])?);
            to_identity = to_identity.min(space.distance(&net[table[a][b]], &net[identity])?);
        }
        r.inverse = r.inverse.max(to_identity);
        r.rows_are_permutations &= seen.iter().all(|s| *s);
    }
    Ok(GroupTable {
        indices,
        table,
        identity,
        residuals: r,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassKind {
    FixedPoint,
    Periodic(u64),
    InfiniteMinimal,
}

/// Fixed point, exact period up to the net size, or neither.
pub fn classify_class(c: &OrbitClosureApprox, sys: &System) -> Result<ClassKind> {
    if !c.stabilized {
        return Err(Error::NotStabilized {
            budget: c.iterates_used,
        });
    }
    let space = sys.space();
    let x = c.base.points()[0];
    let mut y = x;
    for k in 1..=c.net.len() as u64 {
        y = sys.forward(&y);
        if space.distance(&y, &x)? <= RETURN_TOL {
            return Ok(if k == 1 {
                ClassKind::FixedPoint
            } else {
                ClassKind::Periodic(k)
            });
        }
    }
    Ok(ClassKind::InfiniteMinimal)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanecapReport {
    pub kinds: Vec<ClassKind>,
    /// Largest spread of `|z|` over a class net.
    pub radial_deviation: f64,
    /// Every class is a fixed point or infinite minimal.
    pub conforms: bool,
}

/// For a planar decomposition, check that each class lies on a circle about
/// the origin and is a fixed point or an infinite minimal set.
pub fn planecap_check(sys: &System, dec: &Decomposition) -> Result<PlanecapReport> {
    let mut kinds = Vec::with_capacity(dec.classes.len());
    let mut radial_deviation: f64 = 0.0;
    for c in &dec.classes {
        kinds.push(classify_class(c, sys)?);
        let radii: Vec<f64> = c
            .net
            .points()
            .iter()
            .map(|p| {
                p.as_planar()
                    .map(|z| z[0].hypot(z[1]))
                    .ok_or_else(|| Error::DomainMismatch(format!("{p:?} is not a planar point")))
            })
            .collect::<Result<_>>()?;
        let (lo, hi) = radii.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
            (lo.min(*r), hi.max(*r))
        });
        radial_deviation = radial_deviation.max(hi - lo);
    }
    let conforms = kinds
        .iter()
        .all(|k| matches!(k, ClassKind::FixedPoint | ClassKind::InfiniteMinimal));
    Ok(PlanecapReport {
        kinds,
        radial_deviation,
        conforms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sysdef::fixtures::{circle_rotation, identity};

    #[test]
    fn identity_gives_singletons() {
        let sys = identity();
        let sample = vec![
            Point::planar(0.0, 0.0),
            Point::planar(1.0, 0.0),
            Point::planar(0.0, 1.0),
        ];
        let dec = decompose(&sys, &sample, 0.1, 1000, 20).unwrap();
        assert_eq!(dec.class_count(), 3);
        assert_eq!(dec.assignment, vec![0, 1, 2]);
        assert_eq!(classify_class(&dec.classes[0], &sys).unwrap(), ClassKind::FixedPoint);
    }

    #[test]
    fn half_turn_pairs_antipodes() {
        let sys = circle_rotation(0.5);
        let sample = vec![
            Point::Angle(0.1),
            Point::Angle(0.1 + std::f64::consts::PI),
            Point::Angle(1.0),
        ];
        let dec = decompose(&sys, &sample, 0.01, 1000, 20).unwrap();
        assert_eq!(dec.assignment, vec![0, 0, 1]);
        assert_eq!(classify_class(&dec.classes[0], &sys).unwrap(), ClassKind::Periodic(2));
    }

    #[test]
    fn fixed_point_group_is_trivial() {
        let t = orbit_group_table(&identity(), &Point::planar(0.3, 0.4), 0.1, 100, 10).unwrap();
        assert_eq!(t.table, vec![vec![0]]);
        assert_eq!(t.residuals.worst(), 0.0);
    }
}
