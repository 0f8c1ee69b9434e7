//! Finite nets approximating the closure of `{h^n}` in the sup metric on a
//! sample, and checks of its group and isometry structure.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::almost_period::{BudgetReport, Certificate, Verdict};
use crate::dynamics::{iterate, System};
use crate::error::{Error, Result};
use crate::metric_core::{hausdorff_points, nearest, sup_map_distance, Point, Space, EXACT_TOL};

/// Scanning stops, unstabilized, once the net holds this many snapshots.
pub const MAX_MEMBERS: usize = 4096;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SnapshotIndex {
    Iterate(i64),
    Label(String),
}

impl SnapshotIndex {
    pub fn iterate(&self) -> Option<i64> {
        match self {
            SnapshotIndex::Iterate(n) => Some(*n),
            SnapshotIndex::Label(_) => None,
        }
    }
}

impl std::fmt::Display for SnapshotIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SnapshotIndex::Iterate(n) => write!(f, "{n}"),
            SnapshotIndex::Label(s) => f.write_str(s),
        }
    }
}

/// The restriction of a map to a shared finite sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapSnapshot {
    sample: Arc<Vec<Point>>,
    values: Vec<Point>,
    index: SnapshotIndex,
}

impl MapSnapshot {
    /// Snapshot of `h^n`.
    pub fn of_iterate(sys: &System, sample: Arc<Vec<Point>>, n: i64) -> Self {
        let values = sample.iter().map(|x| iterate(sys, x, n)).collect();
        MapSnapshot {
            sample,
            values,
            index: SnapshotIndex::Iterate(n),
        }
    }

    /// Snapshot of an arbitrary map, tagged with a label.
    pub fn of_map<F>(sample: Arc<Vec<Point>>, label: impl Into<String>, f: F) -> Self
    where
        F: Fn(&Point) -> Point,
    {
        let values = sample.iter().map(f).collect();
        MapSnapshot {
            sample,
            values,
            index: SnapshotIndex::Label(label.into()),
        }
    }

    pub fn sample(&self) -> &Arc<Vec<Point>> {
        &self.sample
    }

    pub fn values(&self) -> &[Point] {
        &self.values
    }

    pub fn index(&self) -> &SnapshotIndex {
        &self.index
    }

    /// Same sample, by identity or by value.
    pub fn shares_sample(&self, other: &MapSnapshot) -> bool {
        Arc::ptr_eq(&self.sample, &other.sample) || self.sample == other.sample
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClosureNet {
    pub snapshots: Vec<MapSnapshot>,
    pub epsilon: f64,
    pub n_scanned: u64,
    pub stabilized: bool,
}

impl ClosureNet {
    /// Greedy net of the given snapshots, in order.
    pub fn from_snapshots(space: &Space, epsilon: f64, candidates: Vec<MapSnapshot>) -> Result<Self> {
        if !(epsilon > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "epsilon must be positive, got {epsilon}"
            )));
        }
        let scanned = candidates.len() as u64;
        let mut snapshots: Vec<MapSnapshot> = Vec::new();
        for c in candidates {
            if nearest_member(space, &snapshots, &c, epsilon)?.is_none() {
                snapshots.push(c);
            }
        }
        Ok(ClosureNet {
            snapshots,
            epsilon,
            n_scanned: scanned,
            stabilized: true,
        })
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn verdict(&self) -> Verdict {
        let budget = BudgetReport {
            iterates: self.n_scanned,
            samples: self.snapshots.first().map_or(0, |s| s.sample.len()),
            note: (!self.stabilized).then(|| format!("{} snapshots, still growing", self.len())),
        };
        if self.stabilized {
            Verdict::certified(
                Certificate::CompactClosure {
                    epsilon: self.epsilon,
                    snapshots: self.len(),
                    scanned: self.n_scanned,
                },
                budget,
            )
        } else {
            Verdict::inconclusive(budget)
        }
    }
}

/// Sup distance with early exit once `cutoff` is exceeded.
fn sup_within(space: &Space, a: &[Point], b: &[Point], cutoff: f64) -> Result<Option<f64>> {
    let mut worst: f64 = 0.0;
    for (p, q) in a.iter().zip(b) {
        worst = worst.max(space.distance(p, q)?);
        if worst > cutoff {
            return Ok(None);
        }
    }
    Ok(Some(worst))
}

fn nearest_member(space: &Space, members: &[MapSnapshot], s: &MapSnapshot, eps: f64) -> Result<Option<usize>> {
    for (i, m) in members.iter().enumerate() {
        if !m.shares_sample(s) {
            return Err(Error::DomainMismatch("snapshots over different samples".into()));
        }
        if sup_within(space, &m.values, &s.values, eps)?.is_some() {
            return Ok(Some(i));
        }
    }
    Ok(None)
}

/// Scan `n = 0, 1, -1, 2, -2, ...` up to `|n| <= n_max`, keeping each snapshot
/// that is more than `ε` from every kept one. Stabilized once `patience`
/// consecutive iterates add nothing.
pub fn enumerate_closure(
    sys: &System,
    sample: &[Point],
    epsilon: f64,
    n_max: u64,
    patience: u64,
) -> Result<ClosureNet> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    if sample.is_empty() {
        return Err(Error::InvalidArgument("empty sample".into()));
    }
    let space = sys.space();
    let shared = Arc::new(sample.to_vec());
    let mut net = ClosureNet {
        snapshots: vec![MapSnapshot {
            sample: shared.clone(),
            values: sample.to_vec(),
            index: SnapshotIndex::Iterate(0),
        }],
        epsilon,
        n_scanned: 1,
        stabilized: false,
    };
    let mut fwd = sample.to_vec();
    let mut bwd = sample.to_vec();
    let mut quiet = 1u64;
    for m in 1..=n_max as i64 {
        for sign in [1i64, -1] {
            let cur = if sign > 0 { &mut fwd } else { &mut bwd };
            for p in cur.iter_mut() {
                *p = sys.step(p, sign);
            }
            let snap = MapSnapshot {
                sample: shared.clone(),
                values: cur.clone(),
                index: SnapshotIndex::Iterate(sign * m),
            };
            net.n_scanned += 1;
            if nearest_member(space, &net.snapshots, &snap, epsilon)?.is_none() {
                net.snapshots.push(snap);
                quiet = 0;
                if net.snapshots.len() >= MAX_MEMBERS {
                    return Ok(net);
                }
            } else {
                quiet += 1;
            }
            if quiet >= patience {
                net.stabilized = true;
                return Ok(net);
            }
        }
    }
    Ok(net)
}

/// `f ∘ g`. An iterate `f` is applied to `g`'s values directly; a labelled
/// `f` is looked up on the sample, so `g` must map the sample into itself.
pub fn compose_snapshots(sys: &System, f: &MapSnapshot, g: &MapSnapshot) -> Result<MapSnapshot> {
    if !f.shares_sample(g) {
        return Err(Error::DomainMismatch("snapshots over different samples".into()));
    }
    let space = sys.space();
    let values = match f.index {
        SnapshotIndex::Iterate(n) => g.values.iter().map(|p| iterate(sys, p, n)).collect(),
        SnapshotIndex::Label(_) => g
            .values
            .iter()
            .map(|p| {
                let (k, d) = nearest(space, p, &f.sample)?;
                if d > EXACT_TOL {
                    return Err(Error::DomainMismatch(format!(
                        "{p:?} is not a sample point, so a labelled snapshot cannot act on it"
                    )));
                }
                Ok(f.values[k])
            })
            .collect::<Result<Vec<_>>>()?,
    };
    let index = match (&f.index, &g.index) {
        (SnapshotIndex::Iterate(a), SnapshotIndex::Iterate(b)) => SnapshotIndex::Iterate(a + b),
        (a, b) => SnapshotIndex::Label(format!("({a})∘({b})")),
    };
    Ok(MapSnapshot {
        sample: f.sample.clone(),
        values,
        index,
    })
}

fn distance_to_net(space: &Space, net: &ClosureNet, s: &MapSnapshot) -> Result<f64> {
    let mut best = f64::INFINITY;
    for m in &net.snapshots {
        if let Some(d) = sup_within(space, &m.values, &s.values, best)? {
            best = best.min(d);
        }
    }
    Ok(best)
}

/// Worst residuals of the group laws over all member pairs.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GroupLawReport {
    /// Distance of `f ∘ g` to the nearest member.
    pub composition: f64,
    /// Distance of the inverse of each iterate member to the nearest member.
    pub inverse: f64,
    /// `sup |f ∘ g - g ∘ f|`.
    pub commutativity: f64,
    pub pairs: u64,
}

impl GroupLawReport {
    pub fn holds_within(&self, tol: f64) -> bool {
        self.composition <= tol && self.inverse <= tol && self.commutativity <= tol
    }
}

pub fn check_group_laws(net: &ClosureNet, sys: &System) -> Result<GroupLawReport> {
    let space = sys.space();
    let mut r = GroupLawReport::default();
    for f in &net.snapshots {
        if let SnapshotIndex::Iterate(n) = f.index {
            let inv = MapSnapshot::of_iterate(sys, f.sample.clone(), -n);
            r.inverse = r.inverse.max(distance_to_net(space, net, &inv)?);
        }
        for g in &net.snapshots {
            let fg = compose_snapshots(sys, f, g)?;
            let gf = compose_snapshots(sys, g, f)?;
            r.composition = r.composition.max(distance_to_net(space, net, &fg)?);
            r.commutativity = r.commutativity.max(sup_map_distance(space, &fg, &gf)?);
            r.pairs += 1;
        }
    }
    Ok(r)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IsometryReport {
    /// `max |d(f x, f y) - d(x, y)|` over members and pairs.
    pub defect: f64,
    /// Largest Hausdorff distance between a member's values and the sample.
    pub surjectivity_gap: f64,
}

/// Isometry defect of every member on sample index pairs, and how far each
/// member's image is from covering the sample.
pub fn check_limit_isometries(net: &ClosureNet, sys: &System, pairs: &[(usize, usize)]) -> Result<IsometryReport> {
    let space = sys.space();
    let mut r = IsometryReport::default();
    for f in &net.snapshots {
        let n = f.sample.len();
        for &(i, j) in pairs {
            if i >= n || j >= n {
                return Err(Error::InvalidArgument(format!("pair ({i}, {j}) outside the sample")));
            }
            let before = space.distance(&f.sample[i], &f.sample[j])?;
            let after = space.distance(&f.values[i], &f.values[j])?;
            r.defect = r.defect.max((after - before).abs());
        }
        r.surjectivity_gap = r.surjectivity_gap.max(hausdorff_points(space, &f.values, &f.sample)?);
    }
    Ok(r)
}
