//! Runs every detector on one system and cross-checks the verdicts against
//! the equivalences they must satisfy and against fixture expectations.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::almost_period::{
    classify_cap, equicontinuity_modulus, find_almost_period, BudgetReport, Certificate, Status, Verdict,
    DEFAULT_RING_POINTS,
};
use crate::compactify::{analyze_on_sphere, SphereAnalysisConfig};
use crate::dynamics::{orbit_closure_approx, System};
use crate::error::{Error, Result};
use crate::group_closure::enumerate_closure;
use crate::invariant_metric::invariant_isometry_verdict;
use crate::metric_core::{Point, SpaceKind};
use crate::sysdef::{Detector, FixtureDefaults};

/// Detectors whose verdicts must agree when every point orbit closure is
/// compact.
pub const CHAIN: [Detector; 4] = [
    Detector::Equicontinuity,
    Detector::CompactlyAlmostPeriodic,
    Detector::InvariantIsometry,
    Detector::CompactClosure,
];

/// Sample points whose orbit closures decide the chain hypothesis.
pub const HYPOTHESIS_POINTS: usize = 16;

/// Equicontinuity at each of the points: refuted at any, certified at all.
pub fn equicontinuity_verdict(
    sys: &System,
    points: &[Point],
    epsilon: f64,
    budget: u64,
    schedule: &[f64],
) -> Result<Verdict> {
    let moduli: Vec<Verdict> = points
        .par_iter()
        .map(|x| equicontinuity_modulus(sys, x, epsilon, budget, schedule, DEFAULT_RING_POINTS))
        .collect::<Result<_>>()?;
    let iterates = moduli.iter().map(|v| v.budget.iterates).sum();
    let report = |note: Option<String>| BudgetReport {
        iterates,
        samples: points.len(),
        note,
    };
    if let Some(v) = moduli.iter().find(|v| v.is_refuted()) {
        return Ok(Verdict::refuted(
            v.witness.clone().expect("refuted verdict has a witness"),
            report(None),
        ));
    }
    let mut delta = f64::INFINITY;
    let mut worst: f64 = 0.0;
    for v in &moduli {
        match &v.certificate {
            Some(Certificate::Modulus { delta: d, worst: w, .. }) => {
                delta = delta.min(*d);
                worst = worst.max(*w);
            }
            _ => {
                return Ok(Verdict::inconclusive(report(Some(
                    "equicontinuity inconclusive at a probed point".into(),
                ))))
            }
        }
    }
    Ok(Verdict::certified(
        Certificate::Modulus { epsilon, delta, worst },
        report(None),
    ))
}

/// Run parameters, resolved from fixture defaults and user overrides.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunParams {
    pub epsilon: f64,
    pub sample: usize,
    pub seed: u64,
    pub defaults: FixtureDefaults,
}

impl RunParams {
    pub fn from_defaults(defaults: &FixtureDefaults) -> Self {
        RunParams {
            epsilon: defaults.epsilon,
            sample: defaults.sample,
            seed: 0,
            defaults: defaults.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Contradiction {
    pub first: Detector,
    pub second: Detector,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mismatch {
    pub detector: Detector,
    pub expected: Status,
    pub actual: Status,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    /// Every probed point orbit closure stabilized without escaping.
    pub hypothesis: bool,
    pub contradictions: Vec<Contradiction>,
    pub mismatches: Vec<Mismatch>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Analysis {
    pub verdicts: BTreeMap<Detector, Verdict>,
    pub consistency: ConsistencyReport,
}

impl Analysis {
    pub fn agrees(&self) -> bool {
        self.consistency.contradictions.is_empty() && self.consistency.mismatches.is_empty()
    }
}

fn is_compact_space(sys: &System) -> bool {
    !sys.space().has_membership()
        && matches!(
            sys.space().kind(),
            SpaceKind::Circle
                | SpaceKind::Disk { .. }
                | SpaceKind::Sphere
                | SpaceKind::Torus
                | SpaceKind::CircleUnion { .. }
        )
}

/// Run every applicable detector on `sys`: the window search over `sample`,
/// everything else over `near`.
pub fn run_detectors(
    sys: &System,
    sample: &[Point],
    near: &[Point],
    params: &RunParams,
) -> Result<BTreeMap<Detector, Verdict>> {
    if sample.is_empty() || near.is_empty() {
        return Err(Error::InvalidArgument("empty sample".into()));
    }
    let d = &params.defaults;
    let eps = params.epsilon;
    let schedule = d.probe_schedule(eps);
    let budgets = d.cap_budgets(eps);
    let mut out = BTreeMap::new();
    out.insert(
        Detector::AlmostPeriod,
        find_almost_period(sys, sample, &d.almost_period(eps))?,
    );
    let probed: Vec<Point> = near.iter().take(d.eq_points.max(1)).copied().collect();
    out.insert(
        Detector::Equicontinuity,
        equicontinuity_verdict(sys, &probed, eps, d.eq_budget, &schedule)?,
    );
    out.insert(
        Detector::CompactlyAlmostPeriodic,
        classify_cap(sys, near, eps, &budgets)?,
    );
    let iso_points: Vec<Point> = near.iter().take(d.eq_points.max(2)).copied().collect();
    if iso_points.len() >= 2 {
        out.insert(
            Detector::InvariantIsometry,
            invariant_isometry_verdict(sys, &iso_points, eps, d.truncation, &schedule)?,
        );
    }
    let closure_points: Vec<Point> = near.iter().take(d.closure_sample.max(1)).copied().collect();
    out.insert(
        Detector::CompactClosure,
        enumerate_closure(sys, &closure_points, eps, d.closure_n_max, d.closure_patience)?.verdict(),
    );
    if matches!(sys.space().kind(), SpaceKind::Plane) {
        let config = SphereAnalysisConfig {
            almost_period: d.almost_period(eps),
            cap: budgets,
        };
        let sphere = analyze_on_sphere(sys, sample, near, &config)?;
        out.insert(Detector::AlmostPeriodChordal, sphere.chordal.almost_periodic);
        out.insert(
            Detector::CompactlyAlmostPeriodicChordal,
            sphere.chordal.compactly_almost_periodic,
        );
    }
    Ok(out)
}

/// Whether the probed point orbit closures are all compact.
pub fn chain_hypothesis(sys: &System, near: &[Point], params: &RunParams) -> Result<bool> {
    let d = &params.defaults;
    let points: Vec<Point> = near.iter().take(HYPOTHESIS_POINTS).copied().collect();
    let closures: Vec<bool> = points
        .par_iter()
        .map(|x| {
            orbit_closure_approx(sys, x, params.epsilon, d.closure_budget, d.patience).map(|c| c.is_compact_evidence())
        })
        .collect::<Result<_>>()?;
    Ok(closures.iter().all(|ok| *ok))
}

/// Pairwise contradictions among verdicts. The chain is checked only under
/// its hypothesis; window search against equicontinuity only on compact
/// spaces, and always for the chordal pair.
pub fn cross_check(verdicts: &BTreeMap<Detector, Verdict>, hypothesis: bool, compact: bool) -> Vec<Contradiction> {
    let mut out = Vec::new();
    let mut check = |a: Detector, b: Detector, reason: &str| {
        if let (Some(x), Some(y)) = (verdicts.get(&a), verdicts.get(&b)) {
            if x.status.contradicts(y.status) {
                out.push(Contradiction {
                    first: a,
                    second: b,
                    reason: reason.to_string(),
                });
            }
        }
    };
    if hypothesis {
        for (i, a) in CHAIN.iter().enumerate() {
            for b in &CHAIN[i + 1..] {
                check(*a, *b, "equivalent when point orbit closures are compact");
            }
        }
    }
    if compact {
        check(
            Detector::AlmostPeriod,
            Detector::Equicontinuity,
            "equivalent on compact spaces",
        );
        check(
            Detector::AlmostPeriod,
            Detector::CompactlyAlmostPeriodic,
            "equivalent on compact spaces",
        );
    }
    check(
        Detector::AlmostPeriodChordal,
        Detector::CompactlyAlmostPeriodicChordal,
        "equivalent on the compact sphere",
    );
    check(
        Detector::CompactlyAlmostPeriodic,
        Detector::AlmostPeriodChordal,
        "a planar map is compactly almost periodic iff its extension is almost periodic",
    );
    out
}

/// Run all detectors and check them against each other and `expected`.
pub fn analyze(
    sys: &System,
    sample: &[Point],
    near: &[Point],
    params: &RunParams,
    expected: &BTreeMap<Detector, Status>,
) -> Result<Analysis> {
    let verdicts = run_detectors(sys, sample, near, params)?;
    let hypothesis = chain_hypothesis(sys, near, params)?;
    let contradictions = cross_check(&verdicts, hypothesis, is_compact_space(sys));
    let mismatches = expected
        .iter()
        .filter_map(|(det, want)| {
            let actual = verdicts.get(det).map_or(Status::Inconclusive, |v| v.status);
            (actual != *want).then_some(Mismatch {
                detector: *det,
                expected: *want,
                actual,
            })
        })
        .collect();
    Ok(Analysis {
        verdicts,
        consistency: ConsistencyReport {
            hypothesis,
            contradictions,
            mismatches,
        },
    })
}
