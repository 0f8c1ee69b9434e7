//! The four report-producing commands.

use std::collections::BTreeMap;

use capdyn::almost_period::{classify_cap, displacement_series};
use capdyn::consistency::{analyze, ConsistencyReport, RunParams};
use capdyn::decomposition::{
    check_projection_nonexpansive, class_invariance, classify_class, decompose, orbit_group_table, planecap_check,
    quotient_matrix, ClassKind, GroupResiduals, PlanecapReport,
};
use capdyn::group_closure::{
    check_group_laws, check_limit_isometries, enumerate_closure, GroupLawReport, IsometryReport,
};
use capdyn::invariant_metric::{
    invariant_isometry_verdict, isometry_residual, metric_axioms_check, topology_equivalence_probe, AxiomReport,
    ModulusTable, TruncatedInvariantMetric,
};
use capdyn::metric_core::SpaceKind;
use capdyn::sysdef::Detector;
use capdyn::{Point, Status, Verdict};
use serde::Serialize;

use crate::config::{resolve_params, Command, Resolved, RunConfig, SourceRecord};
use crate::report::{coords, num, to_json, Csv, SCHEMA};
use crate::CliError;

/// Largest orbit net for which group tables and laws are computed.
pub const GROUP_CHECK_MAX: usize = 128;
/// Sample pairs used by the non-expansiveness check.
pub const NONEXPANSIVE_PAIRS: usize = 10_000;
/// Sample points used by the metric axiom check.
pub const AXIOM_POINTS: usize = 24;

/// Everything a command produces, written once the run is over.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub json: String,
    pub csv: Vec<Csv>,
    pub exit: i32,
    pub warnings: Vec<String>,
}

#[derive(Serialize)]
struct Header<'a> {
    schema: u32,
    command: &'static str,
    seed: u64,
    source: &'a SourceRecord,
    system: &'a str,
    parameters: &'a RunParams,
}

fn header<'a>(command: Command, resolved: &'a Resolved, params: &'a RunParams) -> Header<'a> {
    Header {
        schema: SCHEMA,
        command: command.name(),
        seed: params.seed,
        source: &resolved.record,
        system: resolved.system.name(),
        parameters: params,
    }
}

pub fn run_command(config: &RunConfig) -> Result<Outcome, CliError> {
    let resolved = Resolved::load(&config.source)?;
    let params = resolve_params(config, &resolved.defaults)?;
    match config.command {
        Command::Analyze => cmd_analyze(&resolved, &params),
        Command::Decompose => cmd_decompose(&resolved, &params, config.force),
        Command::Closure => cmd_closure(&resolved, &params),
        Command::Metric => cmd_metric(&resolved, &params),
    }
}

#[derive(Serialize)]
struct AnalyzeReport<'a> {
    #[serde(flatten)]
    header: Header<'a>,
    /// Certified almost-period window, when there is one.
    window: Option<u64>,
    verdicts: &'a BTreeMap<Detector, Verdict>,
    consistency: &'a ConsistencyReport,
    agrees: bool,
}

pub fn cmd_analyze(resolved: &Resolved, params: &RunParams) -> Result<Outcome, CliError> {
    let sample = resolved.sample(params);
    let near = resolved.structural_sample(params);
    let a = analyze(&resolved.system, &sample, &near, params, &resolved.expected)?;
    let mut csv = Csv::new("verdicts", &["detector", "status", "expected"]);
    for (det, v) in &a.verdicts {
        let expected = resolved.expected.get(det).map_or("", |s| status_name(*s));
        csv.row(&[det.name().into(), status_name(v.status).into(), expected.into()]);
    }
    let mut warnings: Vec<String> = a
        .consistency
        .contradictions
        .iter()
        .map(|c| {
            format!(
                "contradiction: {} vs {} ({})",
                c.first.name(),
                c.second.name(),
                c.reason
            )
        })
        .collect();
    warnings.extend(a.consistency.mismatches.iter().map(|m| {
        format!(
            "expectation mismatch: {} expected {}, got {}",
            m.detector.name(),
            status_name(m.expected),
            status_name(m.actual)
        )
    }));
    let report = AnalyzeReport {
        header: header(Command::Analyze, resolved, params),
        window: a.verdicts.get(&Detector::AlmostPeriod).and_then(Verdict::window),
        verdicts: &a.verdicts,
        consistency: &a.consistency,
        agrees: a.agrees(),
    };
    Ok(Outcome {
        json: to_json(&report),
        csv: vec![csv],
        exit: if a.agrees() { 0 } else { 1 },
        warnings,
    })
}

fn status_name(s: Status) -> &'static str {
    match s {
        Status::Certified => "certified",
        Status::Refuted => "refuted",
        Status::Inconclusive => "inconclusive",
    }
}

#[derive(Serialize)]
struct ClassSummary {
    size: usize,
    stabilized: bool,
    /// `None` when the class net did not stabilize.
    kind: Option<ClassKind>,
    /// `None` when the net is too large or did not stabilize.
    group_residuals: Option<GroupResiduals>,
}

#[derive(Serialize)]
struct DecomposeReport<'a> {
    #[serde(flatten)]
    header: Header<'a>,
    cap: &'a Verdict,
    forced: bool,
    warning: Option<String>,
    /// Present unless the run stopped before decomposing.
    decomposition: Option<DecompositionSummary>,
}

#[derive(Serialize)]
struct DecompositionSummary {
    class_count: usize,
    assignment: Vec<usize>,
    classes: Vec<ClassSummary>,
    nonexpansive_violation: f64,
    nonexpansive_pairs: usize,
    /// Largest `hausdorff - min_pair` over class pairs.
    quotient_gap: f64,
    class_invariance: f64,
    group_residual_worst: Option<f64>,
    planecap: Option<PlanecapReport>,
}

/// The first `limit` pairs `i < j` in lexicographic order.
pub fn index_pairs(n: usize, limit: usize) -> Vec<(usize, usize)> {
    (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .take(limit)
        .collect()
}

pub fn cmd_decompose(resolved: &Resolved, params: &RunParams, force: bool) -> Result<Outcome, CliError> {
    let sys = &resolved.system;
    let d = &params.defaults;
    let eps = params.epsilon;
    let near = resolved.structural_sample(params);
    let cap = classify_cap(sys, &near, eps, &d.cap_budgets(eps))?;
    let mut warnings = Vec::new();
    let warning = (!cap.is_certified()).then(|| {
        format!(
            "the system is not certified compactly almost periodic (classify_cap {}); orbit closures may not form a continuous decomposition",
            status_name(cap.status)
        )
    });
    let mut report = DecomposeReport {
        header: header(Command::Decompose, resolved, params),
        cap: &cap,
        forced: force,
        warning: warning.clone(),
        decomposition: None,
    };
    if let Some(w) = warning {
        warnings.push(w);
        if !force {
            warnings.push("rerun with --force to decompose anyway".into());
            return Ok(Outcome {
                json: to_json(&report),
                csv: Vec::new(),
                exit: 1,
                warnings,
            });
        }
    }
    let dec = match decompose(sys, &near, eps, d.closure_budget, d.patience) {
        Ok(dec) => dec,
        Err(capdyn::Error::NonCompact(msg)) => {
            warnings.push(format!("decomposition failed: {msg}"));
            return Ok(Outcome {
                json: to_json(&report),
                csv: Vec::new(),
                exit: 1,
                warnings,
            });
        }
        Err(e) => return Err(e.into()),
    };
    let space = sys.space();
    let matrix = quotient_matrix(space, &dec)?;
    let pairs = index_pairs(dec.sample.len(), NONEXPANSIVE_PAIRS);
    let nonexpansive_violation = check_projection_nonexpansive(space, &dec, &pairs)?;
    let mut classes = Vec::with_capacity(dec.class_count());
    for c in &dec.classes {
        let kind = classify_class(c, sys).ok();
        let group_residuals = if c.is_compact_evidence() && c.net.len() <= GROUP_CHECK_MAX {
            let base = c.base.points()[0];
            orbit_group_table(sys, &base, eps, d.closure_budget, d.patience)
                .ok()
                .map(|t| t.residuals)
        } else {
            None
        };
        classes.push(ClassSummary {
            size: c.net.len(),
            stabilized: c.stabilized,
            kind,
            group_residuals,
        });
    }
    let group_residual_worst = classes
        .iter()
        .map(|c| c.group_residuals.as_ref().map(GroupResiduals::worst))
        .collect::<Option<Vec<f64>>>()
        .map(|v| v.into_iter().fold(0.0, f64::max));
    let quotient_gap = matrix.iter().flatten().map(|q| q.difference.abs()).fold(0.0, f64::max);
    let planecap = matches!(space.kind(), SpaceKind::Plane)
        .then(|| planecap_check(sys, &dec).ok())
        .flatten();
    let mut assignment_csv = Csv::new("assignment", &["index", "coord0", "coord1", "class"]);
    for (i, (p, c)) in dec.sample.iter().zip(&dec.assignment).enumerate() {
        let [a, b] = coords(p);
        assignment_csv.row(&[i.to_string(), a, b, c.to_string()]);
    }
    let mut pair_csv = Csv::new("classes", &["class_a", "class_b", "hausdorff", "min_pair"]);
    for (i, row) in matrix.iter().enumerate() {
        for (j, q) in row.iter().enumerate().skip(i + 1) {
            pair_csv.row(&[i.to_string(), j.to_string(), num(q.hausdorff), num(q.min_pair)]);
        }
    }
    report.decomposition = Some(DecompositionSummary {
        class_count: dec.class_count(),
        assignment: dec.assignment.clone(),
        classes,
        nonexpansive_violation,
        nonexpansive_pairs: pairs.len(),
        quotient_gap,
        class_invariance: class_invariance(sys, &dec)?,
        group_residual_worst,
        planecap,
    });
    Ok(Outcome {
        json: to_json(&report),
        csv: vec![assignment_csv, pair_csv],
        exit: 0,
        warnings,
    })
}

#[derive(Serialize)]
struct ClosureReport<'a> {
    #[serde(flatten)]
    header: Header<'a>,
    verdict: &'a Verdict,
    stabilized: bool,
    count: usize,
    scanned: u64,
    /// Iterate index of each net member, in the order they were added.
    trajectory: Vec<i64>,
    group_laws: Option<GroupLawReport>,
    isometries: IsometryReport,
    expected: Option<Status>,
}

pub fn cmd_closure(resolved: &Resolved, params: &RunParams) -> Result<Outcome, CliError> {
    let sys = &resolved.system;
    let d = &params.defaults;
    let near = resolved.structural_sample(params);
    let points: Vec<Point> = near.iter().take(d.closure_sample.max(1)).copied().collect();
    let net = enumerate_closure(sys, &points, params.epsilon, d.closure_n_max, d.closure_patience)?;
    let verdict = net.verdict();
    let group_laws = (net.stabilized && net.len() <= GROUP_CHECK_MAX)
        .then(|| check_group_laws(&net, sys))
        .transpose()?;
    let pairs = index_pairs(points.len(), NONEXPANSIVE_PAIRS);
    let isometries = check_limit_isometries(&net, sys, &pairs)?;
    let expected = resolved.expected.get(&Detector::CompactClosure).copied();
    let mut warnings = Vec::new();
    if let Some(want) = expected.filter(|w| *w != verdict.status) {
        warnings.push(format!(
            "expectation mismatch: {} expected {}, got {}",
            Detector::CompactClosure.name(),
            status_name(want),
            status_name(verdict.status)
        ));
    }
    let mut csv = Csv::new("recurrence", &["n", "displacement", "argmax"]);
    let span = d.span as i64;
    for (k, (disp, arg)) in displacement_series(sys, &points, d.span)?.into_iter().enumerate() {
        csv.row(&[(k as i64 - span).to_string(), num(disp), arg.to_string()]);
    }
    let report = ClosureReport {
        header: header(Command::Closure, resolved, params),
        verdict: &verdict,
        stabilized: net.stabilized,
        count: net.len(),
        scanned: net.n_scanned,
        trajectory: net.snapshots.iter().filter_map(|s| s.index().iterate()).collect(),
        group_laws,
        isometries,
        expected,
    };
    Ok(Outcome {
        json: to_json(&report),
        csv: vec![csv],
        exit: if warnings.is_empty() { 0 } else { 1 },
        warnings,
    })
}

#[derive(Serialize)]
struct MetricReport<'a> {
    #[serde(flatten)]
    header: Header<'a>,
    truncation: u64,
    axioms: AxiomReport,
    /// `|d*(h x, h y) - d*(x, y)|` at the truncation and at twice it.
    isometry_residual: f64,
    isometry_residual_doubled: f64,
    modulus: ModulusTable,
    verdict: &'a Verdict,
}

pub fn cmd_metric(resolved: &Resolved, params: &RunParams) -> Result<Outcome, CliError> {
    let sys = &resolved.system;
    let d = &params.defaults;
    let eps = params.epsilon;
    let near = resolved.structural_sample(params);
    let points: Vec<Point> = near.iter().take(AXIOM_POINTS).copied().collect();
    if points.len() < 2 {
        return Err(CliError::Usage(
            "the metric command needs --sample of at least 2".into(),
        ));
    }
    let metric = TruncatedInvariantMetric::new(sys.clone(), d.truncation);
    let doubled = TruncatedInvariantMetric::new(sys.clone(), 2 * d.truncation);
    let axioms = metric_axioms_check(|x, y| metric.value(x, y), &points)?;
    let pairs: Vec<(Point, Point)> = points.windows(2).map(|w| (w[0], w[1])).collect();
    let residual = isometry_residual(sys, |x, y| metric.value(x, y), &pairs)?;
    let residual_doubled = isometry_residual(sys, |x, y| doubled.value(x, y), &pairs)?;
    let probed: Vec<Point> = near.iter().take(d.eq_points.max(2)).copied().collect();
    let schedule = d.probe_schedule(eps);
    let modulus = topology_equivalence_probe(&metric, &probed, &schedule, eps)?;
    let verdict = invariant_isometry_verdict(sys, &probed, eps, d.truncation, &schedule)?;
    let mut csv = Csv::new("modulus", &["point", "delta", "forward", "backward"]);
    for row in &modulus.rows {
        let i = probed.iter().position(|p| *p == row.x).unwrap_or(usize::MAX);
        csv.row(&[i.to_string(), num(row.delta), num(row.forward), num(row.backward)]);
    }
    let report = MetricReport {
        header: header(Command::Metric, resolved, params),
        truncation: d.truncation,
        axioms,
        isometry_residual: residual,
        isometry_residual_doubled: residual_doubled,
        modulus,
        verdict: &verdict,
    };
    Ok(Outcome {
        json: to_json(&report),
        csv: vec![csv],
        exit: 0,
        warnings: Vec::new(),
    })
}
