//! The invariant metric `d*(x, y) = sup_n d(h^n x, h^n y)`, truncated to
//! `|n| <= N`, and checks that it is a metric making `h` an isometry.

use serde::{Deserialize, Serialize};

use crate::almost_period::{probe_ring, BudgetReport, Certificate, Verdict, Witness, DEFAULT_RING_POINTS};
use crate::dynamics::{iterate, System};
use crate::error::{Error, Result};
use crate::metric_core::{Point, EXACT_TOL};

/// Default unbounded-orbit guard, as a multiple of `d(x, y)`.
pub const DEFAULT_GROWTH_BOUND: f64 = 1e6;

#[derive(Clone, Debug)]
pub struct TruncatedInvariantMetric {
    sys: System,
    truncation: u64,
    growth_bound: f64,
}

/// A value of `d*` together with the iterate index attaining it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DStar {
    pub value: f64,
    pub argmax: i64,
}

impl TruncatedInvariantMetric {
    pub fn new(sys: System, truncation: u64) -> Self {
        TruncatedInvariantMetric {
            sys,
            truncation,
            growth_bound: DEFAULT_GROWTH_BOUND,
        }
    }

    pub fn with_growth_bound(mut self, factor: f64) -> Self {
        self.growth_bound = factor;
        self
    }

    pub fn truncation(&self) -> u64 {
        self.truncation
    }

    pub fn system(&self) -> &System {
        &self.sys
    }

    /// `max_{|n| <= N} d(h^n x, h^n y)`; ties go to the smaller `|n|`, then
    /// to positive `n`.
    pub fn d_star(&self, x: &Point, y: &Point) -> Result<DStar> {
        let space = self.sys.space();
        let base = space.distance(x, y)?;
        let bound = self.growth_bound * base;
        let mut best = DStar { value: base, argmax: 0 };
        let (mut xf, mut yf, mut xb, mut yb) = (*x, *y, *x, *y);
        for m in 1..=self.truncation as i64 {
            xf = self.sys.forward(&xf);
            yf = self.sys.forward(&yf);
            xb = self.sys.inverse(&xb);
            yb = self.sys.inverse(&yb);
            for (d, n) in [(space.distance(&xf, &yf)?, m), (space.distance(&xb, &yb)?, -m)] {
                if base > 0.0 && d > bound {
                    return Err(Error::UnboundedOrbit {
                        index: n,
                        value: d,
                        bound,
                    });
                }
                if d > best.value {
                    best = DStar { value: d, argmax: n };
                }
            }
        }
        Ok(best)
    }

    pub fn value(&self, x: &Point, y: &Point) -> Result<f64> {
        Ok(self.d_star(x, y)?.value)
    }
}

/// `max_{(x, y)} |metric(h x, h y) - metric(x, y)|`.
pub fn isometry_residual<M>(sys: &System, metric: M, pairs: &[(Point, Point)]) -> Result<f64>
where
    M: Fn(&Point, &Point) -> Result<f64>,
{
    if pairs.is_empty() {
        return Err(Error::InvalidArgument("isometry residual over no pairs".into()));
    }
    let mut worst: f64 = 0.0;
    for (x, y) in pairs {
        let before = metric(x, y)?;
        let after = metric(&sys.forward(x), &sys.forward(y))?;
        worst = worst.max((after - before).abs());
    }
    Ok(worst)
}

/// Worst violations of the metric axioms over all triples of a sample.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AxiomReport {
    /// `max |d(x, x)|`.
    pub identity: f64,
    /// `max -d(x, y)`, clamped at zero.
    pub negativity: f64,
    /// `max |d(x, y) - d(y, x)|`.
    pub symmetry: f64,
    /// `max d(x, z) - d(x, y) - d(y, z)`, clamped at zero.
    pub triangle: f64,
    pub triples: u64,
}

impl AxiomReport {
    pub fn worst(&self) -> f64 {
        self.identity.max(self.negativity).max(self.symmetry).max(self.triangle)
    }

    pub fn holds_within(&self, tol: f64) -> bool {
        self.worst() <= tol
    }
}

fn axioms_from_matrix(m: &[Vec<f64>], triples: &mut dyn Iterator<Item = (usize, usize, usize)>) -> AxiomReport {
    let n = m.len();
    let mut r = AxiomReport::default();
    for i in 0..n {
        r.identity = r.identity.max(m[i][i].abs());
        for j in 0..n {
            r.negativity = r.negativity.max(0.0 - m[i][j]);
            r.symmetry = r.symmetry.max((m[i][j] - m[j][i]).abs());
        }
    }
    for (i, j, k) in triples {
        r.triangle = r.triangle.max(m[i][k] - m[i][j] - m[j][k]);
        r.triples += 1;
    }
    r
}

fn distance_matrix<M>(metric: &M, sample: &[Point]) -> Result<Vec<Vec<f64>>>
where
    M: Fn(&Point, &Point) -> Result<f64>,
{
    sample
        .iter()
        .map(|x| sample.iter().map(|y| metric(x, y)).collect())
        .collect()
}

/// Exhaustive axiom check over every ordered triple of `sample`.
pub fn metric_axioms_check<M>(metric: M, sample: &[Point]) -> Result<AxiomReport>
where
    M: Fn(&Point, &Point) -> Result<f64>,
{
    let m = distance_matrix(&metric, sample)?;
    let n = sample.len();
    let mut all = (0..n).flat_map(move |i| (0..n).flat_map(move |j| (0..n).map(move |k| (i, j, k))));
    Ok(axioms_from_matrix(&m, &mut all))
}

/// Axiom check over explicit index triples into `sample`.
pub fn metric_axioms_check_triples<M>(
    metric: M,
    sample: &[Point],
    triples: &[(usize, usize, usize)],
) -> Result<AxiomReport>
where
    M: Fn(&Point, &Point) -> Result<f64>,
{
    let m = distance_matrix(&metric, sample)?;
    if triples.iter().any(|&(i, j, k)| i.max(j).max(k) >= sample.len()) {
        return Err(Error::InvalidArgument("triple index outside the sample".into()));
    }
    Ok(axioms_from_matrix(&m, &mut triples.iter().copied()))
}

/// One row of the two-way modulus table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModulusRow {
    pub x: Point,
    pub delta: f64,
    /// `sup { d*(x, y) : d(x, y) <= δ }` over the probe ring.
    pub forward: f64,
    /// `sup { d(x, y) : d*(x, y) <= δ }` over nested probe rings.
    pub backward: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModulusTable {
    pub rows: Vec<ModulusRow>,
    /// Sample points at which the forward modulus fails to shrink.
    pub diverging: Vec<Point>,
    /// A separating pair at the smallest radius of a diverging point.
    pub witness: Option<Witness>,
}

/// Probe how `d` and the truncated `d*` control each other near each sample
/// point. A point is flagged as diverging when the forward modulus at the
/// smallest radius still reaches `ε`, so no probed `δ` keeps `d*` below `ε`.
pub fn topology_equivalence_probe(
    metric: &TruncatedInvariantMetric,
    sample: &[Point],
    radii: &[f64],
    epsilon: f64,
) -> Result<ModulusTable> {
    if radii.is_empty() || radii.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidArgument(
            "probe radii must be nonempty and strictly decreasing".into(),
        ));
    }
    let sys = metric.system();
    let space = sys.space();
    let mut rows = Vec::new();
    let mut diverging = Vec::new();
    let mut witness = None;
    for x in sample {
        let mut forwards = Vec::with_capacity(radii.len());
        let mut smallest_pair: Option<(Point, DStar)> = None;
        for &delta in radii {
            let mut forward: f64 = 0.0;
            let mut arg = None;
            for y in probe_ring(space, x, delta, DEFAULT_RING_POINTS)? {
                let ds = metric.d_star(x, &y)?;
                if ds.value > forward || arg.is_none() {
                    forward = forward.max(ds.value);
                    arg = Some((y, ds));
                }
            }
            let mut backward: f64 = 0.0;
            let mut r = delta;
            for _ in 0..4 {
                for y in space.ring(x, r, DEFAULT_RING_POINTS) {
                    if metric.value(x, &y)? <= delta + EXACT_TOL {
                        backward = backward.max(space.distance(x, &y)?);
                    }
                }
                r /= 2.0;
            }
            forwards.push(forward);
            smallest_pair = arg;
            rows.push(ModulusRow {
                x: *x,
                delta,
                forward,
                backward,
            });
        }
        if forwards.last().is_some_and(|f| *f >= epsilon) {
            diverging.push(*x);
            if let (None, Some((y, ds))) = (&witness, smallest_pair) {
                witness = Some(Witness::Equicontinuity {
                    epsilon,
                    x: *x,
                    y,
                    n: ds.argmax,
                    probe_distance: space.distance(x, &y)?,
                    distance: space.distance(&iterate(sys, x, ds.argmax), &iterate(sys, &y, ds.argmax))?,
                });
            }
        }
    }
    Ok(ModulusTable {
        rows,
        diverging,
        witness,
    })
}

/// Whether `h` is an isometry of a metric equivalent to `d`: the truncated
/// `d*` must make `h` nearly isometric (residual at `2N` within `2ε`) and
/// stay topologically equivalent to `d` on the probes.
pub fn invariant_isometry_verdict(
    sys: &System,
    sample: &[Point],
    epsilon: f64,
    truncation: u64,
    radii: &[f64],
) -> Result<Verdict> {
    if sample.len() < 2 {
        return Err(Error::InvalidArgument("need at least two sample points".into()));
    }
    let pairs: Vec<(Point, Point)> = sample.windows(2).map(|w| (w[0], w[1])).collect();
    let budget = |note: Option<String>| BudgetReport {
        iterates: 4 * truncation * pairs.len() as u64,
        samples: sample.len(),
        note,
    };
    let metric = TruncatedInvariantMetric::new(sys.clone(), 2 * truncation);
    let residual = match isometry_residual(sys, |x, y| metric.value(x, y), &pairs) {
        Ok(r) => r,
        Err(Error::UnboundedOrbit { index, .. }) => {
            return Ok(Verdict::inconclusive(budget(Some(format!(
                "orbit separation grows without bound (iterate {index})"
            )))))
        }
        Err(e) => return Err(e),
    };
    let table = match topology_equivalence_probe(
        &TruncatedInvariantMetric::new(sys.clone(), truncation),
        sample,
        radii,
        epsilon,
    ) {
        Ok(t) => t,
        Err(Error::UnboundedOrbit { index, .. }) => {
            return Ok(Verdict::inconclusive(budget(Some(format!(
                "orbit separation grows without bound (iterate {index})"
            )))))
        }
        Err(e) => return Err(e),
    };
    if let Some(w) = table.witness {
        if radii.last().copied().unwrap_or(f64::INFINITY) <= epsilon {
            return Ok(Verdict::refuted(w, budget(None)));
        }
    }
    let smallest = *radii.last().expect("nonempty radii");
    let forward_modulus = table
        .rows
        .iter()
        .filter(|r| r.delta == smallest)
        .map(|r| r.forward)
        .fold(0.0, f64::max);
    if table.diverging.is_empty() && residual <= 2.0 * epsilon {
        Ok(Verdict::certified(
            Certificate::InvariantIsometry {
                truncation: 2 * truncation,
                residual,
                forward_modulus,
            },
            budget(None),
        ))
    } else {
        Ok(Verdict::inconclusive(budget(Some(format!(
            "residual {residual:e}, {} diverging probe points",
            table.diverging.len()
        )))))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric_core::Space;

    #[test]
    fn broken_metric_reports_identity_violation() {
        let space = Space::plane();
        let sample = space.sample(6, 0, &crate::metric_core::Region::Default);
        let r = metric_axioms_check(|x, y| Ok(space.distance(x, y)? - 0.1), &sample).unwrap();
        assert!((r.identity - 0.1).abs() < 1e-15);
        assert!(r.negativity > 0.0);
    }

    #[test]
    fn residual_needs_pairs() {
        let sys = System::new("id", Space::plane(), |p| *p, |p| *p);
        assert!(isometry_residual(&sys, |_, _| Ok(0.0), &[]).is_err());
    }

    #[test]
    fn growth_guard_fires_on_expansion() {
        let sys = System::new(
            "double",
            Space::plane(),
            |p| match p {
                Point::Planar(z) => Point::Planar([2.0 * z[0], 2.0 * z[1]]),
                o => *o,
            },
            |p| match p {
                Point::Planar(z) => Point::Planar([0.5 * z[0], 0.5 * z[1]]),
                o => *o,
            },
        );
        let m = TruncatedInvariantMetric::new(sys, 40);
        let err = m
            .d_star(&Point::planar(1.0, 0.0), &Point::planar(0.0, 0.0))
            .unwrap_err();
        assert!(matches!(err, Error::UnboundedOrbit { .. }));
    }
}
