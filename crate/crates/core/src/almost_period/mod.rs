//! Detectors for almost periodicity, equicontinuity of `{h^n}`, and compact
//! almost periodicity.
//!
//! Certification is relative to the finite sample and budgets; refutation is
//! always backed by a [`Witness`] that replays exactly.

mod verdict;

pub use verdict::{BudgetReport, Certificate, Status, Verdict, WindowEntry, Witness, REPLAY_TOL};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{compactum_orbit_closure, iterate, orbit_closure_approx, System};
use crate::error::{Error, Result};
use crate::metric_core::{FiniteCompactum, Point, Space, EXACT_TOL};

/// Displacements within this distance of ε are too close to call.
const MARGINAL: f64 = 1e-9;

/// Probe points per ring radius.
pub const DEFAULT_RING_POINTS: usize = 16;

/// `max_{x ∈ sample} d(h^n(x), x)`.
pub fn displacement(sys: &System, sample: &[Point], n: i64) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::InvalidArgument("displacement over an empty sample".into()));
    }
    let space = sys.space();
    let mut worst: f64 = 0.0;
    for x in sample {
        worst = worst.max(space.distance(&iterate(sys, x, n), x)?);
    }
    Ok(worst)
}

/// Sample displacement for every `n` in `[-span, span]`, together with the
/// index of the sample point attaining it. Entry `k` holds `n = k - span`.
pub fn displacement_series(sys: &System, sample: &[Point], span: u64) -> Result<Vec<(f64, usize)>> {
    if sample.is_empty() {
        return Err(Error::InvalidArgument("displacement over an empty sample".into()));
    }
    let len = 2 * span as usize + 1;
    let mid = span as usize;
    let threads = rayon::current_num_threads().max(1);
    let chunk = sample.len().div_ceil(threads).max(1);
    let space = sys.space();
    let partials: Vec<Result<Vec<(f64, usize)>>> = sample
        .par_chunks(chunk)
        .enumerate()
        .map(|(c, points)| {
            let mut series = vec![(0.0f64, usize::MAX); len];
            for (k, x) in points.iter().enumerate() {
                let idx = c * chunk + k;
                let mut record = |slot: usize, d: f64| {
                    let cur = &mut series[slot];
                    if d > cur.0 || cur.1 == usize::MAX || (d == cur.0 && idx < cur.1) {
                        *cur = (d, idx);
                    }
                };
                record(mid, 0.0);
                let mut f = *x;
                let mut b = *x;
                for m in 1..=mid {
                    f = sys.forward(&f);
                    b = sys.inverse(&b);
                    record(mid + m, space.distance(&f, x)?);
                    record(mid - m, space.distance(&b, x)?);
                }
            }
            Ok(series)
        })
        .collect();
    let mut out = vec![(0.0f64, usize::MAX); len];
    for partial in partials {
        for (slot, (d, idx)) in out.iter_mut().zip(partial?) {
            if slot.1 == usize::MAX || d > slot.0 || (d == slot.0 && idx < slot.1) {
                *slot = (d, idx);
            }
        }
    }
    Ok(out)
}

/// Parameters of the window search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlmostPeriodConfig {
    pub epsilon: f64,
    pub window_max: u64,
    pub span: u64,
    /// Returns must displace by less than `epsilon * (1 - margin_fraction)`.
    #[serde(default)]
    pub margin_fraction: f64,
}

impl AlmostPeriodConfig {
    pub fn new(epsilon: f64, window_max: u64, span: u64) -> Self {
        AlmostPeriodConfig {
            epsilon,
            window_max,
            span,
            margin_fraction: 0.0,
        }
    }

    pub fn with_margin(mut self, fraction: f64) -> Self {
        self.margin_fraction = fraction;
        self
    }
}

/// Return-time structure of a displacement scan.
#[derive(Clone, Debug, PartialEq)]
pub struct ReturnScan {
    pub span: u64,
    /// Iterates with displacement below the return threshold.
    pub returns: Vec<i64>,
    /// Smallest `N` such that every `N` consecutive iterates inside the span
    /// include a return.
    pub window: u64,
}

fn scan_returns(series: &[(f64, usize)], span: u64, threshold: f64) -> ReturnScan {
    let returns: Vec<i64> = series
        .iter()
        .enumerate()
        .filter(|(_, (d, _))| *d < threshold)
        .map(|(k, _)| k as i64 - span as i64)
        .collect();
    let mut window = 0u64;
    for w in returns.windows(2) {
        window = window.max((w[1] - w[0]) as u64);
    }
    if let (Some(first), Some(last)) = (returns.first(), returns.last()) {
        window = window
            .max((first + span as i64 + 1) as u64)
            .max((span as i64 - last + 1) as u64);
    }
    ReturnScan { span, returns, window }
}

/// Window search for almost periodicity on a finite sample.
///
/// Certified with window `N` when every stretch of iterates in `[-span, span]`
/// without a return is shorter than `N` and `N <= window_max`. Refuted when
/// `window_max + 1` consecutive iterates all displace some sample point by at
/// least ε. Inconclusive otherwise.
pub fn find_almost_period(sys: &System, sample: &[Point], config: &AlmostPeriodConfig) -> Result<Verdict> {
    let AlmostPeriodConfig {
        epsilon,
        window_max,
        span,
        margin_fraction,
    } = *config;
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon {epsilon} must be positive")));
    }
    if window_max == 0 || span < window_max {
        return Err(Error::InvalidArgument(format!(
            "need span >= window_max >= 1 (span {span}, window_max {window_max})"
        )));
    }
    if !(0.0..1.0).contains(&margin_fraction) {
        return Err(Error::InvalidArgument(format!(
            "margin fraction {margin_fraction} must lie in [0, 1)"
        )));
    }
    let series = displacement_series(sys, sample, span)?;
    let budget = BudgetReport {
        iterates: 2 * span * sample.len() as u64,
        samples: sample.len(),
        note: None,
    };
    let threshold = epsilon * (1.0 - margin_fraction);
    let scan = scan_returns(&series, span, threshold);
    if scan.returns.len() >= 2 && scan.window <= window_max {
        let worst_return = scan
            .returns
            .iter()
            .map(|n| series[(n + span as i64) as usize].0)
            .fold(0.0, f64::max);
        return Ok(Verdict::certified(
            Certificate::AlmostPeriod {
                epsilon,
                window: scan.window,
                margin: epsilon - worst_return,
                returns: scan.returns.len(),
            },
            budget,
        ));
    }

    // Look for window_max + 1 consecutive iterates that all clearly miss.
    let need = window_max as usize + 1;
    let mut run = 0usize;
    for (k, (d, _)) in series.iter().enumerate() {
        if *d >= epsilon + MARGINAL {
            run += 1;
            if run >= need {
                let start = k + 1 - need;
                let entries = (start..=k)
                    .map(|j| {
                        let (d, idx) = series[j];
                        WindowEntry {
                            n: j as i64 - span as i64,
                            point: sample[idx],
                            displacement: d,
                        }
                    })
                    .collect();
                return Ok(Verdict::refuted(Witness::EmptyWindow { epsilon, entries }, budget));
            }
        } else {
            run = 0;
        }
    }
    let mut budget = budget;
    budget.note = Some(format!(
        "largest return-free stretch {} exceeds window_max {} but no full clear window",
        scan.window, window_max
    ));
    Ok(Verdict::inconclusive(budget))
}

/// Return-time scan exposed for reporting (recurrence plots).
pub fn return_scan(sys: &System, sample: &[Point], epsilon: f64, span: u64) -> Result<ReturnScan> {
    let series = displacement_series(sys, sample, span)?;
    Ok(scan_returns(&series, span, epsilon))
}

/// Probes may overshoot the requested radius by this factor.
pub const PROBE_SLACK: f64 = 1.01;

/// Ring probes about `x` that lie within `PROBE_SLACK * delta` of it.
pub fn probe_ring(space: &Space, x: &Point, delta: f64, count: usize) -> Result<Vec<Point>> {
    let mut out = Vec::new();
    for y in space.ring(x, delta, count) {
        if space.distance(x, &y)? <= PROBE_SLACK * delta {
            out.push(y);
        }
    }
    Ok(out)
}

/// Ring-probe test of equicontinuity of `{h^n : |n| <= iter_budget}` at `x`.
///
/// The schedule is scanned from its largest radius down; the first radius at
/// which no probe pair separates by ε is certified. If every radius fails and
/// the smallest one is at most ε, the separating pair of that radius is the
/// refutation. A schedule whose radii all exceed ε is inconclusive.
pub fn equicontinuity_modulus(
    sys: &System,
    x: &Point,
    epsilon: f64,
    iter_budget: u64,
    probe_schedule: &[f64],
    ring_points: usize,
) -> Result<Verdict> {
    if probe_schedule.is_empty() {
        return Err(Error::InvalidArgument("empty probe schedule".into()));
    }
    if probe_schedule.windows(2).any(|w| w[1] >= w[0]) || probe_schedule.iter().any(|d| !(*d > 0.0)) {
        return Err(Error::InvalidArgument(
            "probe schedule must be positive and strictly decreasing".into(),
        ));
    }
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon {epsilon} must be positive")));
    }
    let space = sys.space();
    space.check_point(x)?;
    let limit = epsilon + EXACT_TOL;
    let mut iterates = 0u64;
    let mut last_failure: Option<Witness> = None;
    for &delta in probe_schedule {
        let probes = probe_ring(space, x, delta, ring_points)?;
        let mut failure = None;
        let mut worst: f64 = 0.0;
        for y in &probes {
            let d = space.distance(x, y)?;
            worst = worst.max(d);
            if d >= limit {
                failure = Some((*y, 0i64, d, d));
                break;
            }
        }
        if failure.is_none() && !probes.is_empty() {
            let mut xf = *x;
            let mut xb = *x;
            let mut yf = probes.clone();
            let mut yb = probes.clone();
            'scan: for m in 1..=iter_budget as i64 {
                xf = sys.forward(&xf);
                xb = sys.inverse(&xb);
                iterates += 2 * (1 + probes.len() as u64);
                for (k, y) in yf.iter_mut().enumerate() {
                    *y = sys.forward(y);
                    let d = space.distance(&xf, y)?;
                    worst = worst.max(d);
                    if d >= limit {
                        failure = Some((probes[k], m, space.distance(x, &probes[k])?, d));
                        break 'scan;
                    }
                }
                for (k, y) in yb.iter_mut().enumerate() {
                    *y = sys.inverse(y);
                    let d = space.distance(&xb, y)?;
                    worst = worst.max(d);
                    if d >= limit {
                        failure = Some((probes[k], -m, space.distance(x, &probes[k])?, d));
                        break 'scan;
                    }
                }
            }
        }
        match failure {
            None => {
                return Ok(Verdict::certified(
                    Certificate::Modulus { epsilon, delta, worst },
                    BudgetReport {
                        iterates,
                        samples: probes.len(),
                        note: None,
                    },
                ));
            }
            Some((y, n, probe_distance, distance)) => {
                last_failure = Some(Witness::Equicontinuity {
                    epsilon,
                    x: *x,
                    y,
                    n,
                    probe_distance,
                    distance,
                });
            }
        }
    }
    let smallest = *probe_schedule.last().expect("nonempty schedule");
    let budget = BudgetReport {
        iterates,
        samples: 1,
        note: None,
    };
    match last_failure {
        Some(w) if smallest <= epsilon => Ok(Verdict::refuted(w, budget)),
        _ => Ok(Verdict::inconclusive(BudgetReport {
            note: Some(format!(
                "every probe radius fails but the smallest ({smallest}) exceeds epsilon"
            )),
            ..budget
        })),
    }
}

/// Budgets for the compact-almost-periodicity classification.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CapBudgets {
    /// Iterate budget for orbit closures.
    pub closure_budget: usize,
    pub patience: usize,
    /// Iterate budget for equicontinuity probes.
    pub eq_budget: u64,
    pub probe_schedule: Vec<f64>,
    pub ring_points: usize,
    /// Number of leading sample points probed for equicontinuity.
    pub eq_points: usize,
    /// Number of leading sample points forming the test compactum, unless an
    /// explicit compactum is given.
    pub compactum_points: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compactum: Option<Vec<Point>>,
}

impl CapBudgets {
    pub fn new(epsilon: f64) -> Self {
        CapBudgets {
            closure_budget: 20_000,
            patience: 20,
            eq_budget: 10_000,
            probe_schedule: default_schedule(epsilon),
            ring_points: DEFAULT_RING_POINTS,
            eq_points: 32,
            compactum_points: 32,
            compactum: None,
        }
    }
}

/// Radii `ε, ε/2, ε/5, ε/10, ε/20, ε/50, ε/100`.
pub fn default_schedule(epsilon: f64) -> Vec<f64> {
    [1.0, 0.5, 0.2, 0.1, 0.05, 0.02, 0.01]
        .iter()
        .map(|f| f * epsilon)
        .collect()
}

/// Compact almost periodicity: bounded orbit closures with no escape for
/// every sample point and for a test compactum, and equicontinuity at the
/// probed sample points. The first refutation found, in that order, is
/// returned with its witness.
pub fn classify_cap(sys: &System, sample: &[Point], epsilon: f64, budgets: &CapBudgets) -> Result<Verdict> {
    if sample.is_empty() {
        return Err(Error::InvalidArgument("classify_cap needs a nonempty sample".into()));
    }
    let mut notes: Vec<String> = Vec::new();
    let mut iterates = 0u64;

    let closures: Vec<_> = sample
        .par_iter()
        .map(|x| orbit_closure_approx(sys, x, epsilon, budgets.closure_budget, budgets.patience))
        .collect::<Result<_>>()?;
    let mut largest = 0;
    for c in &closures {
        iterates += 2 * c.iterates_used as u64;
        largest = largest.max(c.net.len());
        if let Some(w) = c.escape_witnesses.first() {
            return Ok(Verdict::refuted(
                Witness::Escape(w.clone()),
                BudgetReport {
                    iterates,
                    samples: sample.len(),
                    note: Some("orbit closure of a sample point escapes".into()),
                },
            ));
        }
    }
    let unstable = closures.iter().filter(|c| !c.stabilized).count();
    if unstable > 0 {
        notes.push(format!("{unstable} point orbit closures did not stabilize"));
    }

    let compactum_points: Vec<Point> = match &budgets.compactum {
        Some(ps) => ps.clone(),
        None => sample.iter().take(budgets.compactum_points.max(1)).copied().collect(),
    };
    let compactum = FiniteCompactum::exact(compactum_points)?;
    let cc = compactum_orbit_closure(sys, &compactum, epsilon, budgets.closure_budget, budgets.patience)?;
    iterates += 2 * (cc.iterates_used * compactum.len()) as u64;
    if let Some(w) = cc.escape_witnesses.first() {
        return Ok(Verdict::refuted(
            Witness::Escape(w.clone()),
            BudgetReport {
                iterates,
                samples: sample.len(),
                note: Some("orbit closure of the test compactum escapes".into()),
            },
        ));
    }
    if !cc.stabilized {
        notes.push("compactum orbit closure did not stabilize".into());
    }

    let probed: Vec<Point> = sample.iter().take(budgets.eq_points.max(1)).copied().collect();
    let moduli: Vec<Verdict> = probed
        .par_iter()
        .map(|x| {
            equicontinuity_modulus(
                sys,
                x,
                epsilon,
                budgets.eq_budget,
                &budgets.probe_schedule,
                budgets.ring_points,
            )
        })
        .collect::<Result<_>>()?;
    let mut smallest_delta = f64::INFINITY;
    for v in &moduli {
        iterates += v.budget.iterates;
        match (&v.status, &v.certificate) {
            (Status::Refuted, _) => {
                return Ok(Verdict::refuted(
                    v.witness.clone().expect("refuted verdict has a witness"),
                    BudgetReport {
                        iterates,
                        samples: sample.len(),
                        note: Some("equicontinuity fails at a sample point".into()),
                    },
                ));
            }
            (Status::Certified, Some(Certificate::Modulus { delta, .. })) => {
                smallest_delta = smallest_delta.min(*delta);
            }
            _ => notes.push("equicontinuity inconclusive at a sample point".into()),
        }
    }

    let budget = BudgetReport {
        iterates,
        samples: sample.len(),
        note: if notes.is_empty() { None } else { Some(notes.join("; ")) },
    };
    if notes.is_empty() {
        Ok(Verdict::certified(
            Certificate::CompactlyAlmostPeriodic {
                epsilon,
                largest_point_closure: largest,
                compactum_closure: cc.net.len(),
                smallest_delta,
            },
            budget,
        ))
    } else {
        Ok(Verdict::inconclusive(budget))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric_core::{wrap_angle, Space};
    use std::f64::consts::TAU;

    fn rotation(alpha: f64) -> System {
        System::new(
            "rot",
            Space::circle(),
            move |p| match p {
                Point::Angle(a) => Point::Angle(wrap_angle(a + alpha)),
                other => *other,
            },
            move |p| match p {
                Point::Angle(a) => Point::Angle(wrap_angle(a - alpha)),
                other => *other,
            },
        )
        .isometric()
    }

    #[test]
    fn displacement_at_zero_vanishes() {
        let sys = rotation(1.234);
        let sample = sys.space().sample(20, 1, &crate::metric_core::Region::Default);
        assert_eq!(displacement(&sys, &sample, 0).unwrap(), 0.0);
        assert!(displacement(&sys, &[], 1).is_err());
    }

    #[test]
    fn window_search_argument_checks() {
        let sys = rotation(1.0);
        let s = [Point::Angle(0.0)];
        assert!(find_almost_period(&sys, &s, &AlmostPeriodConfig::new(0.0, 4, 10)).is_err());
        assert!(find_almost_period(&sys, &s, &AlmostPeriodConfig::new(0.1, 0, 10)).is_err());
        assert!(find_almost_period(&sys, &s, &AlmostPeriodConfig::new(0.1, 20, 10)).is_err());
    }

    #[test]
    fn quarter_turn_has_window_four() {
        let sys = rotation(TAU / 4.0);
        let v = find_almost_period(&sys, &[Point::Angle(0.5)], &AlmostPeriodConfig::new(1e-6, 10, 100)).unwrap();
        assert_eq!(v.window(), Some(4));
    }

    #[test]
    fn schedule_must_decrease() {
        let sys = rotation(1.0);
        let x = Point::Angle(0.0);
        assert!(equicontinuity_modulus(&sys, &x, 0.1, 10, &[], 16).is_err());
        assert!(equicontinuity_modulus(&sys, &x, 0.1, 10, &[0.1, 0.1], 16).is_err());
        assert!(equicontinuity_modulus(&sys, &x, 0.1, 10, &[0.05, 0.1], 16).is_err());
    }

    #[test]
    fn coarse_schedule_is_inconclusive_for_isometries() {
        let sys = rotation(1.0);
        let v = equicontinuity_modulus(&sys, &Point::Angle(0.0), 0.1, 100, &[0.5, 0.3], 16).unwrap();
        assert_eq!(v.status, Status::Inconclusive);
    }
}
