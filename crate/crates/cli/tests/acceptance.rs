#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Acceptance suite: one PASS/FAIL line per criterion.

use std::f64::consts::TAU;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use capdyn::almost_period::{classify_cap, displacement, find_almost_period, AlmostPeriodConfig, Witness};
use capdyn::compactify::{analyze_on_sphere, sphere_sample, SphereAnalysisConfig};
use capdyn::consistency::{analyze, RunParams};
use capdyn::decomposition::{check_projection_nonexpansive, decompose, orbit_group_table, quotient_matrix};
use capdyn::dynamics::compactum_orbit_closure;
use capdyn::group_closure::{check_limit_isometries, enumerate_closure, ClosureNet, MapSnapshot};
use capdyn::invariant_metric::{isometry_residual, metric_axioms_check_triples, TruncatedInvariantMetric};
use capdyn::metric_core::{hausdorff_points, sup_map_distance, Region};
use capdyn::sysdef::fixtures::{discrete_bijection, fixture, FixtureDescriptor, GOLDEN, NAMES, SHRINKING_CIRCLES};
use capdyn::{Certificate, FiniteCompactum, Point, Space};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

const TOL: f64 = 1e-12;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)*) => {
        if !$cond {
            return Err(format!($($fmt)*));
        }
    };
}

fn ok<T, E: std::fmt::Display>(r: Result<T, E>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn load(name: &str) -> Result<FixtureDescriptor, String> {
    ok(fixture(name))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("rational rotation 3/8", criterion_1),
        ("golden rotation", criterion_2),
        ("disk twist", criterion_3),
        ("plane irrational rotation", criterion_4),
        ("shrinking circles", criterion_5),
        ("bijections without a closed limit", criterion_6),
        ("metric and property suites", criterion_7),
        ("decomposition suite", criterion_8),
        ("consistency harness", criterion_9),
        ("command line", criterion_10),
    ];
    let mut failed = 0;
    for (i, (title, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {title} ({secs:.2}s): {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {title} ({secs:.2}s): {why}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let f = load("circle_rotation:3/8")?;
    let d = &f.defaults;
    let sample = f.sample(d.sample, 0);
    let v = ok(find_almost_period(&f.system, &sample, &d.almost_period(d.epsilon)))?;
    ensure!(v.window() == Some(8), "window {:?}, expected 8", v.window());
    for k in -4i64..=4 {
        let disp = ok(displacement(&f.system, &sample, 8 * k))?;
        ensure!(disp <= TOL, "displacement {disp:e} at n = {}", 8 * k);
    }
    let net = ok(enumerate_closure(
        &f.system,
        &sample[..16],
        d.epsilon,
        d.closure_n_max,
        d.closure_patience,
    ))?;
    ensure!(net.stabilized && net.len() == 8, "closure of {} snapshots", net.len());
    let t = ok(orbit_group_table(
        &f.system,
        &sample[0],
        d.epsilon,
        d.closure_budget,
        d.patience,
    ))?;
    ensure!(t.table.len() == 8, "group of order {}", t.table.len());
    for (a, row) in t.table.iter().enumerate() {
        for (b, &p) in row.iter().enumerate() {
            ensure!(
                (t.indices[a] + t.indices[b]).rem_euclid(8) == t.indices[p].rem_euclid(8),
                "product of {} and {} is not {}",
                t.indices[a],
                t.indices[b],
                t.indices[p]
            );
        }
    }
    ensure!(t.residuals.worst() <= TOL, "group residuals {:?}", t.residuals);
    let secs = start.elapsed().as_secs_f64();
    ensure!(secs < 1.0, "took {secs:.2}s");
    Ok(format!("N = 8, 8 snapshots, Z_8 table exact, {secs:.3}s"))
}

fn arc(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    r.min(TAU - r)
}

/// Smallest `N` such that every `N` consecutive integers of `[-span, span]`
/// hold an `n` with `hit(n)`.
fn brute_force_window(span: i64, hit: impl Fn(i64) -> bool) -> Option<u64> {
    let hits: Vec<i64> = (-span..=span).map(|n| i64::from(hit(n))).collect();
    let mut prefix = vec![0i64; hits.len() + 1];
    for (i, h) in hits.iter().enumerate() {
        prefix[i + 1] = prefix[i] + h;
    }
    (1..=hits.len()).find_map(|n| {
        (0..=hits.len() - n)
            .all(|s| prefix[s + n] - prefix[s] > 0)
            .then_some(n as u64)
    })
}

fn criterion_2() -> Outcome {
    let f = load("circle_rotation:golden")?;
    let eps = 0.1;
    let span = 100_000i64;
    let sample = f.sample(f.defaults.sample, 0);
    let config = AlmostPeriodConfig::new(eps, f.defaults.window_max, span as u64);
    let v = ok(find_almost_period(&f.system, &sample, &config))?;
    let window = v.window().ok_or_else(|| format!("not certified: {:?}", v.status))?;
    // h^n moves every point by the arc of n golden turns, taken in closed form.
    let oracle = brute_force_window(span, |n| arc(TAU * ((n as f64 * GOLDEN) % 1.0)) < eps);
    ensure!(Some(window) == oracle, "window {window}, brute force {oracle:?}");
    let net = ok(enumerate_closure(&f.system, &sample[..16], eps, 10_000, 2_000))?;
    let bound = (TAU / eps).ceil() as usize + 1;
    ensure!(net.stabilized, "closure did not stabilize");
    ensure!(net.len() <= bound, "net of {} exceeds {bound}", net.len());
    Ok(format!(
        "N(0.1) = {window} matches the scan over ±1e5, net {} <= {bound}",
        net.len()
    ))
}

fn criterion_3() -> Outcome {
    let f = load("disk_twist")?;
    let params = RunParams::from_defaults(&f.defaults);
    ensure!(params.sample == 512, "default sample {}", params.sample);
    let start = Instant::now();
    let sample = f.sample(params.sample, 0);
    let near = f.structural_sample(params.sample, 0);
    let a = ok(analyze(&f.system, &sample, &near, &params, &f.expected))?;
    let secs = start.elapsed().as_secs_f64();
    ensure!(secs < 10.0, "analysis took {secs:.2}s");
    let cap = &a.verdicts[&capdyn::sysdef::Detector::CompactlyAlmostPeriodic];
    ensure!(cap.is_refuted(), "classify_cap {:?}", cap.status);
    let w = cap.witness.as_ref().ok_or("no witness")?;
    ensure!(
        matches!(w, Witness::Equicontinuity { .. }),
        "witness is not an equicontinuity pair: {w:?}"
    );
    let replay = ok(w.replay(&f.system))?;
    ensure!(replay <= TOL, "witness replays with discrepancy {replay:e}");

    let d = &f.defaults;
    let radii: Vec<f64> = sample[..8]
        .iter()
        .filter_map(Point::as_planar)
        .map(|z| z[0].hypot(z[1]))
        .collect();
    for &r in &radii {
        let circle = f.system.space().sample(64, 1, &Region::Radii(vec![r]));
        let v = ok(find_almost_period(&f.system, &circle, &d.almost_period(d.epsilon)))?;
        ensure!(v.is_certified(), "radius {r}: {:?}", v.status);
    }
    let net = ok(enumerate_closure(
        &f.system,
        &near[..d.closure_sample],
        d.epsilon,
        10_000,
        d.closure_patience,
    ))?;
    ensure!(!net.stabilized, "closure stabilized with {} snapshots", net.len());
    Ok(format!(
        "CAP refuted (replay {replay:e}), AP on {} sampled radii, closure unstable at {} snapshots, {secs:.2}s at sample 512",
        radii.len(),
        net.len()
    ))
}

fn criterion_4() -> Outcome {
    let f = load("plane_irrational_rotation")?;
    let d = &f.defaults;
    let eps = d.epsilon;
    let sample = f.sample(d.sample, 0);
    let largest = sample
        .iter()
        .filter_map(Point::as_planar)
        .map(|z| z[0].hypot(z[1]))
        .fold(0.0, f64::max);
    ensure!(largest <= 100.0 && largest > 50.0, "sample radius {largest}");
    let config = SphereAnalysisConfig {
        almost_period: d.almost_period(eps),
        cap: d.cap_budgets(eps),
    };
    let near = f.structural_sample(d.sample, 0);
    let s = ok(analyze_on_sphere(&f.system, &sample, &near, &config))?;
    let euclid = &s.euclidean.almost_periodic;
    ensure!(euclid.is_refuted(), "Euclidean window search {:?}", euclid.status);
    let replay = ok(euclid.witness.as_ref().ok_or("no witness")?.replay(&f.system))?;
    ensure!(replay <= TOL, "refutation replays with discrepancy {replay:e}");
    ensure!(
        matches!(
            sphere_sample(&sample)[0],
            Point::Sphere(capdyn::compactify::SpherePoint::Infinity)
        ),
        "the chordal sample does not contain infinity"
    );
    let chordal = &s.chordal.almost_periodic;
    let (window, margin) = match &chordal.certificate {
        Some(Certificate::AlmostPeriod { window, margin, .. }) => (*window, *margin),
        _ => return Err(format!("chordal window search {:?}", chordal.status)),
    };
    ensure!(margin >= eps / 10.0, "certification margin {margin} below eps/10");
    Ok(format!(
        "Euclidean refuted (replay {replay:e}), chordal certified with N = {window}, margin {margin:.4}"
    ))
}

fn criterion_5() -> Outcome {
    let f = load("shrinking_circles")?;
    let d = &f.defaults;
    let eps = d.epsilon;
    let compactum = d.compactum.clone().ok_or("fixture has no compactum")?;
    let k = ok(FiniteCompactum::exact(compactum))?;
    let c = ok(compactum_orbit_closure(
        &f.system,
        &k,
        eps,
        d.closure_budget,
        d.patience,
    ))?;
    ensure!(!c.escape_witnesses.is_empty(), "no escape witness");
    let escape = ok(Witness::Escape(c.escape_witnesses[0].clone()).replay(&f.system))?;
    let near = f.structural_sample(d.sample, 0);
    let cap = ok(classify_cap(&f.system, &near, eps, &d.cap_budgets(eps)))?;
    ensure!(cap.is_refuted(), "classify_cap {:?}", cap.status);
    let mut circles = 0;
    for n in [1u32, 2, 5, 16, SHRINKING_CIRCLES] {
        let h = 1.0 / f64::from(n);
        let circle: Vec<Point> = (0..32)
            .map(|j| Point::Cylinder {
                height: h,
                angle: TAU * f64::from(j) / 32.0,
            })
            .collect();
        let v = ok(find_almost_period(&f.system, &circle, &d.almost_period(eps)))?;
        ensure!(v.is_certified(), "circle at height 1/{n}: {:?}", v.status);
        circles += 1;
    }
    Ok(format!(
        "{} escape witness(es) (replay {escape:e}), CAP refuted, AP on {circles} circles",
        c.escape_witnesses.len()
    ))
}

fn criterion_6() -> Outcome {
    let m = 100i64;
    let sample: Arc<Vec<Point>> = Arc::new((1..=m).map(Point::Integer).collect());
    let doubling = MapSnapshot::of_map(sample.clone(), "doubling", |p| match p {
        Point::Integer(k) => Point::Integer(2 * k),
        o => *o,
    });
    let space = Space::discrete();
    let mut trail = Vec::new();
    for n in [10, 50, 99, 100, 200, 1000] {
        let f = MapSnapshot::of_iterate(&discrete_bijection(n), sample.clone(), 1);
        let dist = ok(sup_map_distance(&space, &f, &doubling))?;
        ensure!(dist == if n < m { 1.0 } else { 0.0 }, "n = {n}: sup distance {dist}");
        trail.push(format!("{n}:{dist}"));
    }
    let net = ok(ClosureNet::from_snapshots(&space, 0.5, vec![doubling]))?;
    let pairs: Vec<(usize, usize)> = (0..m as usize)
        .flat_map(|i| (i + 1..m as usize).map(move |j| (i, j)))
        .collect();
    let r = ok(check_limit_isometries(&net, &discrete_bijection(m), &pairs))?;
    ensure!(r.defect == 0.0, "limit is not an isometry: defect {}", r.defect);
    ensure!(r.surjectivity_gap == 1.0, "surjectivity gap {}", r.surjectivity_gap);
    Ok(format!(
        "sup distance to doubling by n [{}], surjectivity gap 1",
        trail.join(" ")
    ))
}

fn random_triples(rng: &mut StdRng, n: usize, count: usize) -> Vec<(usize, usize, usize)> {
    (0..count)
        .map(|_| (rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..n)))
        .collect()
}

fn all_space_samples() -> Vec<(Space, Vec<Point>)> {
    let plane = Space::plane();
    let mut wide = plane.sample(100, 1, &Region::Ball { radius: 100.0 });
    wide.extend(plane.sample(100, 2, &Region::Default));
    let sphere_points = sphere_sample(&wide);
    let mut out: Vec<(Space, Vec<Point>)> = [
        Space::circle(),
        Space::disk(1.0),
        Space::discrete(),
        Space::torus(),
        Space::circle_union(4),
        Space::cylinder(),
    ]
    .into_iter()
    .map(|s| {
        let pts = s.sample(200, 3, &Region::Default);
        (s, pts)
    })
    .collect();
    out.push((plane, wide));
    out.push((Space::sphere(), sphere_points));
    for name in ["dense_circle_subset", "shrinking_circles"] {
        let space = fixture(name).expect("registered fixture").system.space().clone();
        let pts = space.sample(200, 4, &Region::Default);
        out.push((space, pts));
    }
    out
}

fn criterion_7() -> Outcome {
    let mut rng = StdRng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    let spaces = all_space_samples();
    for (space, pts) in &spaces {
        let triples = random_triples(&mut rng, pts.len(), 10_000);
        let r = ok(metric_axioms_check_triples(|x, y| space.distance(x, y), pts, &triples))?;
        ensure!(r.holds_within(TOL) && r.triples == 10_000, "{:?}: {r:?}", space.kind());
        worst = worst.max(r.worst());
    }

    let conj = load("conjugated_rotation")?;
    let pts = conj.sample(40, 5);
    for n in [10, 100, 1000] {
        let m = TruncatedInvariantMetric::new(conj.system.clone(), n);
        let triples = random_triples(&mut rng, pts.len(), 10_000);
        let r = ok(metric_axioms_check_triples(|x, y| m.value(x, y), &pts, &triples))?;
        ensure!(r.holds_within(TOL), "d* at N = {n}: {r:?}");
        worst = worst.max(r.worst());
    }

    let mut hausdorff_pairs = 0;
    for k in 0..1000 {
        let (space, pts) = &spaces[k % spaces.len()];
        let pick = |rng: &mut StdRng| -> Vec<Point> {
            let len = rng.gen_range(1..20);
            (0..len).map(|_| pts[rng.gen_range(0..pts.len())]).collect()
        };
        let (a, b) = (pick(&mut rng), pick(&mut rng));
        let directed = |p: &[Point], q: &[Point]| -> Result<f64, String> {
            let mut sup: f64 = 0.0;
            for x in p {
                let mut inf = f64::INFINITY;
                for y in q {
                    inf = inf.min(ok(space.distance(x, y))?);
                }
                sup = sup.max(inf);
            }
            Ok(sup)
        };
        let oracle = directed(&a, &b)?.max(directed(&b, &a)?);
        let got = ok(hausdorff_points(space, &a, &b))?;
        ensure!(got == oracle, "pair {k}: {got} != {oracle}");
        hausdorff_pairs += 1;
    }

    let pairs: Vec<(Point, Point)> = pts.windows(2).map(|w| (w[0], w[1])).collect();
    let mut residuals = Vec::new();
    for n in [10, 20, 40, 80, 160, 320, 640, 1280] {
        let m = TruncatedInvariantMetric::new(conj.system.clone(), n);
        residuals.push(ok(isometry_residual(&conj.system, |x, y| m.value(x, y), &pairs))?);
    }
    ensure!(
        residuals.windows(2).all(|w| w[1] <= w[0] + TOL),
        "residuals not weakly decreasing: {residuals:?}"
    );
    Ok(format!(
        "{} spaces and d* at N = 10, 100, 1000 over 1e4 triples (worst {worst:e}), {hausdorff_pairs} Hausdorff pairs exact, residual {:.3e} -> {:.3e}",
        spaces.len(),
        residuals[0],
        residuals[residuals.len() - 1]
    ))
}

fn criterion_8() -> Outcome {
    let f = load("annulus_rotation")?;
    let d = &f.defaults;
    let eps = d.epsilon;
    ensure!(
        d.region == Region::Radii(vec![1.0, 1.5, 2.0]),
        "annulus radii {:?}",
        d.region
    );
    let sample = f.structural_sample(200, 0);
    let dec = ok(decompose(&f.system, &sample, eps, d.closure_budget, d.patience))?;
    ensure!(dec.class_count() == 3, "{} classes", dec.class_count());
    let space = f.system.space();
    let mut gap: f64 = 0.0;
    for row in ok(quotient_matrix(space, &dec))? {
        for q in row {
            gap = gap.max(q.difference.abs());
        }
    }
    ensure!(gap <= 2.0 * eps, "|hausdorff - min pair| reaches {gap}");
    let mut rng = StdRng::seed_from_u64(8);
    let pairs: Vec<(usize, usize)> = (0..10_000)
        .map(|_| (rng.gen_range(0..sample.len()), rng.gen_range(0..sample.len())))
        .collect();
    let violation = ok(check_projection_nonexpansive(space, &dec, &pairs))?;
    ensure!(violation <= 2.0 * eps, "nonexpansive violation {violation}");
    let mut residual: f64 = 0.0;
    for c in &dec.classes {
        let t = ok(orbit_group_table(
            &f.system,
            &c.base.points()[0],
            eps,
            d.closure_budget,
            d.patience,
        ))?;
        residual = residual.max(t.residuals.worst());
    }
    ensure!(residual <= 2.0 * eps, "group-table residual {residual}");
    Ok(format!(
        "3 classes, quotient gap {gap:.4}, nonexpansive violation {violation:.4}, group residual {residual:.4}"
    ))
}

fn criterion_9() -> Outcome {
    let mut summary = Vec::new();
    let mut contradictions = Vec::new();
    let mut mismatches = 0;
    for name in NAMES.iter().copied().chain(["identity"]) {
        let f = load(name)?;
        let params = RunParams::from_defaults(&f.defaults);
        let sample = f.sample(params.sample, params.seed);
        let near = f.structural_sample(params.sample, params.seed);
        let a = ok(analyze(&f.system, &sample, &near, &params, &f.expected))?;
        for c in &a.consistency.contradictions {
            contradictions.push(format!("{name}: {} vs {}", c.first.name(), c.second.name()));
        }
        mismatches += a.consistency.mismatches.len();
        summary.push(name);
    }
    ensure!(
        contradictions.is_empty(),
        "contradictions: {}",
        contradictions.join("; ")
    );
    Ok(format!(
        "{} fixtures, no contradictions, {mismatches} expectation mismatches",
        summary.len()
    ))
}

fn run_cli(args: &[&str]) -> std::process::Output {
    std::process::Command::new(env!("CARGO_BIN_EXE_capdyn"))
        .args(args)
        .output()
        .expect("capdyn binary runs")
}

fn criterion_10() -> Outcome {
    let dir = ok(tempfile::tempdir())?;
    let path = |name: &str| dir.path().join(name).to_string_lossy().into_owned();
    let runs: [(&str, &[&str]); 8] = [
        (
            "twist",
            &["analyze", "--fixture", "disk_twist", "--sample", "128", "--seed", "3"],
        ),
        ("metric", &["metric", "--fixture", "disk_twist", "--sample", "32"]),
        (
            "closure",
            &["closure", "--fixture", "circle_rotation:golden", "--span", "500"],
        ),
        ("annulus", &["decompose", "--fixture", "annulus_rotation"]),
        ("plane", &["analyze", "--fixture", "plane_irrational_rotation"]),
        ("shrink", &["analyze", "--fixture", "shrinking_circles"]),
        ("shift", &["analyze", "--fixture", "plane_translation"]),
        ("dense", &["analyze", "--fixture", "dense_circle_subset"]),
    ];
    let mut witnesses = 0;
    for (stem, args) in runs {
        let mut reports = Vec::new();
        for copy in ["a", "b"] {
            let out = path(&format!("{stem}_{copy}.json"));
            let mut full: Vec<&str> = args.to_vec();
            full.extend(["--out", &out]);
            let o = run_cli(&full);
            ensure!(
                o.status.code() == Some(0),
                "{stem}: exit {:?}: {}",
                o.status.code(),
                String::from_utf8_lossy(&o.stderr)
            );
            reports.push((out.clone(), ok(std::fs::read(&out))?));
        }
        ensure!(reports[0].1 == reports[1].1, "{stem}: reports differ between runs");
        let o = run_cli(&["--verify-witness", &reports[0].0]);
        let text = String::from_utf8_lossy(&o.stdout).into_owned();
        ensure!(
            o.status.code() == Some(0),
            "{stem}: verify exit {:?}: {text}",
            o.status.code()
        );
        ensure!(!text.contains("MISMATCH"), "{stem}: {text}");
        witnesses += text.lines().filter(|l| l.starts_with("ok ")).count();
    }
    ensure!(witnesses > 0, "no witnesses replayed");

    let bad = path("mysys.txt");
    ok(std::fs::write(
        &bad,
        "mode: cartesian\nforward: x +, y\ninverse: x, y\n",
    ))?;
    let o = run_cli(&["analyze", "--file", &bad]);
    ensure!(o.status.code() == Some(2), "malformed file exit {:?}", o.status.code());
    ensure!(
        String::from_utf8_lossy(&o.stderr).contains("line 2"),
        "no diagnostic on stderr"
    );
    ensure!(
        run_cli(&["analyze"]).status.code() == Some(2),
        "missing source accepted"
    );
    ensure!(
        run_cli(&["analyze", "--fixture", "circle_rotation:3/8"]).status.code() == Some(0),
        "rational rotation did not exit 0"
    );
    let o = run_cli(&["decompose", "--fixture", "disk_twist", "--sample", "32"]);
    ensure!(
        o.status.code() == Some(1),
        "non-CAP decompose exit {:?}",
        o.status.code()
    );
    let o = run_cli(&["decompose", "--fixture", "disk_twist", "--sample", "32", "--force"]);
    ensure!(
        o.status.code() == Some(0),
        "forced decompose exit {:?}",
        o.status.code()
    );

    // A perturbed witness must fail replay.
    let shifted = path("shift_a.json");
    let mut report: serde_json::Value = ok(serde_json::from_str(&ok(std::fs::read_to_string(&shifted))?))?;
    let entries =
        &mut report["verdicts"]["find_almost_period"]["witness"]["empty_window"]["entries"][0]["displacement"];
    let stored = entries.as_f64().ok_or("translation report lacks a window witness")?;
    *entries = serde_json::Value::from(stored + 1e-9);
    let tampered = path("tampered.json");
    ok(std::fs::write(&tampered, ok(serde_json::to_string(&report))?))?;
    ensure!(
        run_cli(&["--verify-witness", &tampered]).status.code() == Some(1),
        "tampered witness accepted"
    );
    Ok(format!(
        "{} reports byte-identical across runs, {witnesses} witnesses replayed, exit codes 0/1/2 as specified",
        runs.len()
    ))
}
