//! Acceptance suite: one numbered criterion per line of output.
//!
//! Run with `cargo test -p cmin-cli --test acceptance`. Exits nonzero when
//! any criterion fails.

use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use cmin_core::compact::{directed_hausdorff, hausdorff_with, HausdorffKernel};
use cmin_core::flows::*;
use cmin_core::gallery::{
    distance_to_circle, entries_named, locate, make_flow, random_sphere_points, run_entries,
    run_expectations, FlowOptions, GalleryEntry, GalleryReport, GalleryRun, Locator,
    IDENTITY_RESONANT_LEVELS,
};
use cmin_core::topology::{component_separation, epsilon_components_of};
use cmin_core::{
    contained_in_ball, detect_minimal_set, hausdorff_distance, omega_limit_estimate,
    test_stability, CompactSetSample, DetectParams, FlowSpec, HyperKind, LcVerdict, PhasePoint,
    PhaseSpace, StabilityKind, Structure,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// One named part of a criterion.
struct Check {
    name: String,
    ok: bool,
    detail: String,
}

#[derive(Default)]
struct Checks(Vec<Check>);

impl Checks {
    fn add(&mut self, name: impl Into<String>, ok: bool, detail: impl Into<String>) {
        self.0.push(Check {
            name: name.into(),
            ok,
            detail: detail.into(),
        });
    }

    fn expectations(&mut self, report: &GalleryReport) {
        for r in &report.results {
            self.add(
                format!("{} {}", report.entry, r.id),
                r.passed,
                r.detail.clone(),
            );
        }
    }

    fn error(&mut self, name: &str, e: impl std::fmt::Display) {
        self.add(name, false, format!("error: {e}"));
    }
}

type Criterion = fn(&mut Checks);

fn pt(c: Vec<f64>) -> PhasePoint {
    PhasePoint::new(c)
}

fn at(c: &[f64]) -> Locator {
    Locator(c.to_vec())
}

fn gallery(
    name: &str,
    opts: &FlowOptions,
    checks: &mut Checks,
) -> Option<(GalleryEntry, GalleryRun)> {
    let entry = match make_flow(name, opts) {
        Ok(e) => e,
        Err(e) => {
            checks.error(name, e);
            return None;
        }
    };
    match run_expectations(&entry) {
        Ok((report, run)) => {
            checks.expectations(&report);
            Some((entry, run))
        }
        Err(e) => {
            checks.error(name, e);
            None
        }
    }
}

fn naive_hausdorff(a: &CompactSetSample, b: &CompactSetSample) -> f64 {
    let dir = |x: &CompactSetSample, y: &CompactSetSample| {
        x.points()
            .map(|p| {
                y.points()
                    .map(|q| x.space.distance(p, q))
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    };
    dir(a, b).max(dir(b, a))
}

fn random_sample(rng: &mut ChaCha8Rng, space: &PhaseSpace) -> CompactSetSample {
    let n = rng.gen_range(1..=500);
    let pts: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            let mut p: Vec<f64> = (0..space.ambient_dim)
                .map(|_| rng.gen_range(-1.5..1.5))
                .collect();
            space.project(&mut p);
            p
        })
        .collect();
    CompactSetSample::from_points(space.clone(), 0.0, &pts)
}

fn c1_kernels(checks: &mut Checks) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let spaces = [
        PhaseSpace::euclidean(2),
        PhaseSpace::euclidean(3),
        PhaseSpace::cylinder(),
        PhaseSpace::sphere(2),
        PhaseSpace::sphere(3),
    ];
    let (mut mismatches, mut axiom_failures) = (0, 0);
    for i in 0..1000 {
        let sp = &spaces[i % spaces.len()];
        let (a, b, c) = (
            random_sample(&mut rng, sp),
            random_sample(&mut rng, sp),
            random_sample(&mut rng, sp),
        );
        let want = naive_hausdorff(&a, &b);
        for k in [
            HausdorffKernel::Brute,
            HausdorffKernel::EarlyBreak,
            HausdorffKernel::Grid,
        ] {
            if hausdorff_with(k, &a, &b).unwrap() != want {
                mismatches += 1;
            }
        }
        let ab = hausdorff_distance(&a, &b).unwrap();
        let ba = hausdorff_distance(&b, &a).unwrap();
        let ac = hausdorff_distance(&a, &c).unwrap();
        let bc = hausdorff_distance(&b, &c).unwrap();
        if ab != want
            || ab != ba
            || hausdorff_distance(&a, &a).unwrap() != 0.0
            || ac > ab + bc + 1e-12
        {
            axiom_failures += 1;
        }
    }
    checks.add(
        "oracle equality",
        mismatches == 0,
        format!("{mismatches} kernel mismatches"),
    );
    checks.add(
        "metric axioms",
        axiom_failures == 0,
        format!("{axiom_failures} failing instances"),
    );
}

fn c2_nested(checks: &mut Checks) {
    let Some((_, run)) = gallery("nested_rings", &FlowOptions::default(), checks) else {
        return;
    };
    let space = &run.space;
    let ann = &run.annotations;
    let res = space.resolution;
    checks.add(
        "record count",
        space.len() == 5,
        format!("{} records", space.len()),
    );

    let origin = locate(space, &at(&[0.0, 0.0])).unwrap();
    let spread = space.records[origin]
        .sample
        .points()
        .map(cmin_core::space::norm)
        .fold(0.0, f64::max);
    checks.add(
        "origin record",
        spread < 2.0 * res,
        format!("d_H to {{0}} = {spread:.2e}"),
    );

    let mut rings = Vec::new();
    for n in 1..=4 {
        let r = 1.0 / n as f64;
        let i = locate(space, &at(&[r, 0.0])).unwrap();
        let d = distance_to_circle(&space.records[i].sample, r, 4096).unwrap();
        checks.add(
            format!("ring 1/{n} matches circle"),
            d < 2.0 * res,
            format!("d_H = {d:.2e}"),
        );
        rings.push((n, i));
    }
    let mut worst = 0.0f64;
    for (a, &(n, i)) in rings.iter().enumerate() {
        for &(m, j) in &rings[..a] {
            let exact = (1.0 / n as f64 - 1.0 / m as f64).abs();
            worst = worst.max((space.dmatrix.get(i, j) - exact).abs() / exact);
        }
    }
    checks.add(
        "pairwise ring distances",
        worst <= 0.05,
        format!("worst relative error {worst:.4}"),
    );

    for &(n, i) in &rings {
        let k = ann.verdicts[i].kind;
        checks.add(
            format!("ring 1/{n} unstable"),
            k == StabilityKind::UnstableWitnessed,
            format!("{k:?}"),
        );
    }
    let k = ann.verdicts[origin].kind;
    checks.add(
        "origin stable",
        k == StabilityKind::StableAtScale,
        format!("{k:?}"),
    );
    let v = run.diagnosis.diagnostics[origin].verdict;
    checks.add("origin not-lc", v == LcVerdict::NotLc, format!("{v:?}"));
    let fires = run.diagnosis.predictions[origin].fires;
    checks.add("prediction at origin", fires, format!("fires = {fires}"));
    let h = &ann.hyper[origin];
    let confirmed = h.kind == HyperKind::ClosureMember
        && !h.offending.is_empty()
        && h.offending
            .iter()
            .all(|id| rings.iter().any(|&(_, i)| &space.records[i].id == id));
    checks.add(
        "offenders are rings",
        confirmed,
        format!("{:?} {:?}", h.kind, h.offending),
    );
    let fp = run.confusion.false_positives;
    checks.add(
        "zero false positives",
        fp == 0,
        format!("{fp} false positives"),
    );
}

fn c3_pendulum(checks: &mut Checks) {
    let Some((_, run)) = gallery("pendulum", &FlowOptions::default(), checks) else {
        return;
    };
    let space = &run.space;
    let ann = &run.annotations;
    let centre = locate(space, &at(&[0.0, 0.0])).unwrap();
    let saddle = locate(space, &at(&[-0.5, 0.0])).unwrap();
    checks.add(
        "centre stable",
        ann.verdicts[centre].kind == StabilityKind::StableAtScale,
        format!("{:?}", ann.verdicts[centre].kind),
    );
    checks.add(
        "saddle unstable",
        ann.verdicts[saddle].kind == StabilityKind::UnstableWitnessed,
        format!("{:?}", ann.verdicts[saddle].kind),
    );
    let members: Vec<usize> = (0..space.len())
        .filter(|&i| ann.hyper[i].kind == HyperKind::HyperStableAtScale)
        .collect();
    let dec = epsilon_components_of(space, &members, 2.0 * space.mesh).unwrap();
    let sep = component_separation(space, &dec).unwrap();
    checks.add(
        "three hyper-stable components",
        dec.len() == 3 && sep > 4.0 * space.mesh,
        format!("{} components, separation {sep:.3}", dec.len()),
    );
    let frac = run.recurrence.as_ref().map_or(0.0, |r| r.fraction);
    checks.add(
        "recurrent sample",
        frac >= 0.95,
        format!("fraction {frac:.3}"),
    );
    let agree = ann
        .minus_verdicts
        .as_ref()
        .map(|m| m.iter().zip(&ann.verdicts).all(|(a, b)| a.kind == b.kind));
    checks.add(
        "(-)stability agrees",
        agree == Some(true),
        format!("{agree:?}"),
    );
}

fn c4_v_lambda(checks: &mut Checks) {
    let entries = entries_named("v_lambda").unwrap();
    let runs = run_entries(&entries);
    let mut identity = None;
    for (entry, out) in entries.iter().zip(runs) {
        let (report, run) = match out {
            Ok(x) => x,
            Err(e) => {
                checks.error(&entry.name, e);
                continue;
            }
        };
        checks.expectations(&report);
        let space = &run.space;
        let ann = &run.annotations;
        if entry.name.contains("identity") {
            let hs = ann
                .hyper
                .iter()
                .filter(|h| h.kind == HyperKind::HyperStableAtScale)
                .count();
            checks.add(
                "identity: no hyper-stable records",
                hs == 0,
                format!("{hs} hyper-stable"),
            );
            identity = Some(entry.clone());
        } else {
            let bad = ann.verdicts.iter().filter(|v| !v.is_stable()).count();
            checks.add(
                format!("{}: all stable", entry.name),
                bad == 0,
                format!("{bad} not stable"),
            );
            let all: Vec<usize> = (0..space.len()).collect();
            let dec = epsilon_components_of(space, &all, 2.0 * space.mesh).unwrap();
            checks.add(
                format!("{}: one component", entry.name),
                dec.len() == 1,
                format!("{} components", dec.len()),
            );
        }
    }
    let Some(entry) = identity else { return };
    let p = &entry.params;
    let res = p.harvest.detect.resolution;
    let golden = (5f64.sqrt() - 1.0) / 2.0;
    for level in IDENTITY_RESONANT_LEVELS {
        let ring = detect_minimal_set(
            &entry.flow,
            &pt(solid_torus_point(0.0, level.sqrt(), 0.0)),
            &p.harvest.detect,
        )
        .unwrap();
        let mut into = Vec::new();
        let mut tori = true;
        for k in 0..3 {
            let delta = 0.1 * golden / 2f64.powi(k);
            let mut worst = 0.0f64;
            for s in [level - delta, level + delta] {
                let t = detect_minimal_set(
                    &entry.flow,
                    &pt(solid_torus_point(0.0, s.sqrt(), 0.0)),
                    &p.harvest.detect,
                )
                .unwrap();
                tori &= t.structure == Structure::QuasiperiodicTorus
                    && hausdorff_distance(&ring.sample, &t.sample).unwrap() > p.harvest.dedup_eps();
                worst = worst.max(directed_hausdorff(&ring.sample, &t.sample).unwrap());
            }
            into.push(worst);
        }
        // Nets fix a directed distance only up to half their resolution.
        let shrinking = into.windows(2).all(|w| w[1] <= w[0] + res / 2.0) && into[2] <= res;
        let v = test_stability(&entry.flow, &ring, &p.classify.stability, 0).unwrap();
        checks.add(
            format!("ring at level {level:.3} inside torus limit"),
            ring.structure == Structure::Periodic
                && tori
                && shrinking
                && v.kind == StabilityKind::UnstableWitnessed,
            format!(
                "{:?}, directed d_H {into:.4?}, {:?}",
                ring.structure, v.kind
            ),
        );
    }
}

fn c5_hopf(checks: &mut Checks) {
    let Some((entry, run)) = gallery("hopf", &FlowOptions::default(), checks) else {
        return;
    };
    let space = &run.space;
    let rec = run.recurrence.as_ref();
    checks.add(
        "recurrence on 200 seeds",
        rec.is_some_and(|r| r.fraction == 1.0 && r.tested >= 200),
        format!("{:?}", rec.map(|r| (r.recurrent, r.tested))),
    );
    let rp = entry.params.recurrence.as_ref().unwrap();
    checks.add(
        "recurrence parameters",
        rp.delta == 1e-4 && rp.horizon == 10.0 * std::f64::consts::TAU,
        format!("δ = {}, horizon = {}", rp.delta, rp.horizon),
    );
    let bad_period = space
        .records
        .iter()
        .filter(|r| {
            r.structure != Structure::Periodic
                || r.period
                    .is_none_or(|t| (t - std::f64::consts::TAU).abs() > 1e-6)
        })
        .count();
    checks.add(
        "periods 2π",
        bad_period == 0,
        format!("{bad_period} of {} off", space.len()),
    );
    let unstable = run
        .annotations
        .verdicts
        .iter()
        .filter(|v| !v.is_stable())
        .count();
    checks.add(
        "all stable",
        unstable == 0,
        format!("{unstable} not stable"),
    );
    let all: Vec<usize> = (0..space.len()).collect();
    let dec = epsilon_components_of(space, &all, space.mesh).unwrap();
    checks.add(
        "one component",
        dec.len() == 1,
        format!("{} components", dec.len()),
    );
    let centres = random_sphere_points(4, 20, 0xba11);
    let empty = centres
        .iter()
        .filter(|c| {
            !space
                .records
                .iter()
                .any(|r| r.sample.distance_to(c.coords()).unwrap() <= 0.3)
        })
        .count();
    checks.add(
        "balls of radius 0.3 meet records",
        empty == 0,
        format!("{empty} of 20 empty"),
    );
}

fn c6_north_south(checks: &mut Checks) {
    let Some((entry, run)) = gallery("north_south", &FlowOptions::default(), checks) else {
        return;
    };
    let space = &run.space;
    for (id, r) in &run.attractors {
        checks.add(
            format!("{id} basin"),
            r.is_attractor == Some(true) && r.fraction >= 0.95,
            format!("fraction {:.3}", r.fraction),
        );
    }
    let frac = run.recurrence.as_ref().map(|r| r.fraction);
    checks.add("no recurrence", frac == Some(0.0), format!("{frac:?}"));
    let north = locate(space, &at(&[0.0, 0.0, 1.0])).unwrap();
    let gap = (0..space.len())
        .filter(|&j| j != north)
        .map(|j| space.dmatrix.get(north, j))
        .fold(f64::INFINITY, f64::min);
    checks.add(
        "attractor isolated",
        space.len() == 2 && gap > entry.params.classify.hyper_radius,
        format!("{} records, nearest other at {gap:.3}", space.len()),
    );
}

fn c7_limits(checks: &mut Checks) {
    let f = v_lambda(LambdaSpec::Golden);
    let d = DetectParams {
        burn_in: 1.0,
        window: 1500.0,
        dt: 0.02,
        resolution: 0.05,
        ..DetectParams::default()
    };
    let lp = d.limit();
    let x = pt(solid_torus_point(0.0, 0.5, 0.0));
    let wx = omega_limit_estimate(&f, &x, &lp).unwrap();
    let gaps: Vec<f64> = (1..=6)
        .map(|n| {
            let xn = pt(solid_torus_point(
                0.0,
                0.5 + 0.1 / 2f64.powi(n),
                0.3 / n as f64,
            ));
            hausdorff_distance(&omega_limit_estimate(&f, &xn, &lp).unwrap(), &wx).unwrap()
        })
        .collect();
    let close = gaps.iter().all(|&g| g < 3.0 * d.resolution);
    checks.add("ω-limit convergence", close, format!("d_H {gaps:.4?}"));

    let entry = make_flow("nested_rings", &FlowOptions::default()).unwrap();
    let rev = entry.flow.reversed();
    let res = entry.params.harvest.detect.resolution;
    let horizon = 4000.0;
    let mut tested = 0;
    let mut stuck = Vec::new();
    for n in 1..=3 {
        let outer = 1.0 / n as f64;
        let inner = 1.0 / (n + 1) as f64;
        let radius = outer - (outer - inner) / 2.0;
        for s in &entry.params.seeds {
            let r0 = cmin_core::space::norm(s.coords());
            // Seeds on a ring are recurrent; seeds inside the next ring's
            // disk have backward orbits that accumulate on that ring.
            if r0 <= inner + res || r0 > radius {
                continue;
            }
            tested += 1;
            let orbit = rev.orbit_sample(s, horizon, 0.5).unwrap();
            if !orbit.points().any(|p| cmin_core::space::norm(p) > radius) {
                stuck.push(r0);
            }
        }
    }
    checks.add(
        "escaping orbits leave U backward",
        tested > 0 && stuck.is_empty(),
        format!("{tested} seeds, stuck at {stuck:?}"),
    );
}

/// Rigid rotation of the plane; every circle about the origin is minimal.
fn rotation() -> FlowSpec {
    FlowSpec::from_map(
        "rotation",
        PhaseSpace::euclidean(2),
        |t, x, y| {
            let (s, c) = t.sin_cos();
            y[0] = c * x[0] - s * x[1];
            y[1] = s * x[0] + c * x[1];
        },
        None,
    )
}

fn c8_containment(checks: &mut Checks) {
    let f = rotation();
    let d = DetectParams {
        burn_in: 1.0,
        window: 7.0,
        dt: 2e-4,
        resolution: 5e-4,
        period_horizon: 7.0,
        ..DetectParams::default()
    };
    let circle = |r: f64| detect_minimal_set(&f, &pt(vec![r, 0.0]), &d).unwrap();
    let base = circle(1.0);
    let mut rows = Vec::new();
    let mut ok = base.structure == Structure::Periodic;
    for n in 0..8 {
        let eps = 0.2 / 2f64.powi(n);
        let c = circle(1.0 + 0.9 * eps);
        let inside = contained_in_ball(&c.sample, &base.sample, eps).unwrap();
        let dh = hausdorff_distance(&c.sample, &base.sample).unwrap();
        ok &= inside && dh <= eps;
        rows.push(format!("ε={eps:.4}: d_H={dh:.4}"));
    }
    checks.add("containment bounds d_H", ok, rows.join(", "));
}

fn strip_timestamps(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes)
        .lines()
        .filter(|l| !l.trim_start().starts_with("\"generated_at\""))
        .collect::<Vec<_>>()
        .join("\n")
}

fn cmin(args: &[&str]) -> std::io::Result<std::process::Output> {
    Command::new(env!("CARGO_BIN_EXE_cmin")).args(args).output()
}

fn pipeline_outputs(dir: &Path) -> Result<Vec<(String, String)>, String> {
    let d = dir.to_str().unwrap();
    let space = format!("{d}/cmin.json");
    let classified = format!("{d}/classified.json");
    let diagnosed = format!("{d}/diagnostics.json");
    let steps: [Vec<&str>; 4] = [
        vec!["harvest", "--flow", "nested_rings", "-o", d],
        vec!["classify", "--space", &space],
        vec!["diagnose", "--space", &space],
        vec![
            "crossvalidate",
            "--classified",
            &classified,
            "--diagnosed",
            &diagnosed,
            "-o",
            d,
        ],
    ];
    for args in &steps {
        let out = cmin(args).map_err(|e| e.to_string())?;
        if !out.status.success() {
            return Err(format!(
                "{args:?}: {}",
                String::from_utf8_lossy(&out.stderr)
            ));
        }
    }
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| e.to_string())?
        .map(|e| e.unwrap().path())
        .collect();
    files.sort();
    Ok(files
        .iter()
        .map(|p| {
            let name = p.file_name().unwrap().to_string_lossy().into_owned();
            (name, strip_timestamps(&std::fs::read(p).unwrap()))
        })
        .collect())
}

fn c9_determinism(checks: &mut Checks) {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("run");
    let first = pipeline_outputs(&dir);
    let second = pipeline_outputs(&dir);
    match (first, second) {
        (Ok(a), Ok(b)) => {
            let names: Vec<&str> = a.iter().map(|(n, _)| n.as_str()).collect();
            let differing: Vec<&str> = a
                .iter()
                .zip(&b)
                .filter(|(x, y)| x != y)
                .map(|(x, _)| x.0.as_str())
                .collect();
            checks.add(
                "identical artifacts",
                a.len() == b.len() && a.len() >= 7 && differing.is_empty(),
                format!("{names:?}, differing {differing:?}"),
            );
        }
        (Err(e), _) | (_, Err(e)) => checks.error("pipeline", e),
    }
}

fn main() -> ExitCode {
    let criteria: [(&str, Criterion, Duration); 9] = [
        (
            "Hausdorff kernels match the oracle",
            c1_kernels,
            Duration::from_secs(60),
        ),
        (
            "nested rings end to end",
            c2_nested,
            Duration::from_secs(180),
        ),
        ("pendulum", c3_pendulum, Duration::from_secs(180)),
        (
            "v_lambda three profiles",
            c4_v_lambda,
            Duration::from_secs(300),
        ),
        ("Hopf flow", c5_hopf, Duration::from_secs(180)),
        ("north-south flow", c6_north_south, Duration::from_secs(60)),
        ("limit-set properties", c7_limits, Duration::from_secs(120)),
        (
            "containment radii bound d_H",
            c8_containment,
            Duration::from_secs(60),
        ),
        ("determinism", c9_determinism, Duration::from_secs(180)),
    ];
    let filter: Vec<usize> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let mut failed = 0;
    for (i, (name, run, budget)) in criteria.iter().enumerate() {
        let number = i + 1;
        if !filter.is_empty() && !filter.contains(&number) {
            continue;
        }
        let mut checks = Checks::default();
        let start = Instant::now();
        run(&mut checks);
        let elapsed = start.elapsed();
        let bad: Vec<&Check> = checks.0.iter().filter(|c| !c.ok).collect();
        let in_time = elapsed <= *budget;
        let pass = !checks.0.is_empty() && bad.is_empty() && in_time;
        println!(
            "criterion {number}: {} {name} ({} checks, {:.1}s of {}s)",
            if pass { "PASS" } else { "FAIL" },
            checks.0.len(),
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
        for c in &checks.0 {
            if std::env::var_os("CMIN_ACCEPTANCE_VERBOSE").is_some() || !c.ok {
                eprintln!(
                    "    [{}] {}: {}",
                    if c.ok { "ok" } else { "FAIL" },
                    c.name,
                    c.detail
                );
            }
        }
        if !in_time {
            eprintln!("    over the runtime budget");
        }
        if !pass {
            failed += 1;
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        eprintln!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
