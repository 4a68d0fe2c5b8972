//! Acceptance run: one line per criterion with its verdict and runtime.
//! Exits non-zero when any criterion fails.

use std::f64::consts::{PI, TAU};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use holab::bundle::transport_operator;
use holab::curvature::{
    abelian_stokes_check, ambrose_singer_verify, plaques_convergence, reduced_algebra, reduction_check,
    sign_oracle_check, SignConvention, DEFAULT_FLAGGED_LIMIT, STOKES_BOUNDARY_SAMPLES,
};
use holab::diffeology::{candidate_family, check_family_properties, is_plot, Diffeology, OpenBox, Plot};
use holab::holonomy::{axiom_suite, flatness_check, group_law_residuals, holonomy_family, Flatness};
use holab::liealg::DEFAULT_RANK_TOLERANCE;
use holab::scenario::{
    axiom_cases, builtin_names, convergence_path, holonomy_bundle_samples, probe_points, random_loops, Scenario,
};
use holab::Result;

const STEPS: usize = 1000;
const SEED: u64 = 42;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Result<Outcome> {
    Ok(Outcome {
        passed,
        detail: detail.into(),
    })
}

fn within(elapsed: Duration, limit: f64) -> bool {
    elapsed.as_secs_f64() < limit
}

fn sphere_latitudes() -> Result<Outcome> {
    let t0 = Instant::now();
    let s = Scenario::builtin("sphere-lc")?;
    let fam = s.family("latitudes").expect("latitude family");
    let records = holonomy_family(&s.connection, &fam.loops, STEPS)?;
    let mut worst = 0.0_f64;
    for (rec, phi) in records.iter().zip([PI / 6.0, PI / 4.0, PI / 3.0, PI / 2.0]) {
        let m = rec.element.matrix();
        let angle = m[(1, 0)].atan2(m[(0, 0)]);
        let expected = TAU * (1.0 - phi.cos());
        let gap = (angle - expected + PI).rem_euclid(TAU) - PI;
        worst = worst.max(gap.abs());
    }
    let elapsed = t0.elapsed();
    outcome(
        records.len() == 4 && worst <= 1e-6 && within(elapsed, 1.0),
        format!("max angle error {worst:.3e} over {} latitudes", records.len()),
    )
}

fn abelian_stokes() -> Result<Outcome> {
    let t0 = Instant::now();
    let s = Scenario::builtin("magnetic-u1")?;
    let mut worst = 0.0_f64;
    for lp in random_loops(&s, 20, SEED)? {
        let c = abelian_stokes_check(&s.connection, &lp, STEPS, STOKES_BOUNDARY_SAMPLES)?;
        worst = worst.max(c.relative_error);
    }
    outcome(worst <= 1e-4 && within(t0.elapsed(), 5.0), format!("max relative error {worst:.3e} on 20 loops"))
}

fn axioms() -> Result<Outcome> {
    let t0 = Instant::now();
    let mut ok = true;
    let mut parts = Vec::new();
    for name in builtin_names() {
        let s = Scenario::builtin(name)?;
        let cases = axiom_cases(&s, 20, SEED)?;
        let r = axiom_suite(&s.connection, &cases, STEPS, 1e-6);
        let worst = r.summary.iter().map(|a| a.max_residual).fold(0.0, f64::max);
        ok &= r.passed && r.verdicts_consistent && r.cases.len() == 20;
        parts.push(format!("{name} {worst:.1e}"));
    }
    outcome(ok && within(t0.elapsed(), 30.0), parts.join(", "))
}

fn group_laws() -> Result<Outcome> {
    let mut worst = 0.0_f64;
    let mut parts = Vec::new();
    for name in builtin_names() {
        let s = Scenario::builtin(name)?;
        let loops = random_loops(&s, 100, SEED)?;
        let mut local = 0.0_f64;
        for i in 0..50 {
            let (a, b, c) = (&loops[2 * i], &loops[2 * i + 1], &loops[(2 * i + 2) % 100]);
            local = local.max(group_law_residuals(&s.connection, a, b, c, STEPS)?.max());
        }
        worst = worst.max(local);
        parts.push(format!("{name} {local:.1e}"));
    }
    outcome(worst <= 1e-5, parts.join(", "))
}

fn plaques() -> Result<Outcome> {
    let mut ok = true;
    let mut parts = Vec::new();
    for name in ["magnetic-u1", "so3-generic"] {
        let s = Scenario::builtin(name)?;
        let c = convergence_path(&s)?;
        let conv = plaques_convergence(&s.connection, &s.center, &c, &[250, 500, 1000], SignConvention::Oracle)?;
        let r = conv.runs.last().expect("three runs").residual;
        let order = conv.orders.iter().copied().fold(f64::INFINITY, f64::min);
        ok &= r <= 1e-4 && order >= 1.8;
        parts.push(format!("{name} residual {r:.2e} order {order:.2}"));
    }
    outcome(ok, parts.join(", "))
}

fn curvature_sign() -> Result<Outcome> {
    let mut ok = true;
    let mut parts = Vec::new();
    for name in builtin_names() {
        let s = Scenario::builtin(name)?;
        let r = sign_oracle_check(&s.connection, &probe_points(&s), 0.2 * s.loop_radius, STEPS)?;
        ok &= r.oracle_passes();
        // so3-reducible is non-abelian but its connection values commute.
        if name == "so3-generic" {
            ok &= !r.paper_passes();
        }
        parts.push(format!("{name} {:.1e} (flag {:.1e})", r.max_oracle_mismatch, r.max_paper_mismatch));
    }
    outcome(ok, parts.join(", "))
}

fn ambrose_singer() -> Result<Outcome> {
    let t0 = Instant::now();
    let mut parts = Vec::new();

    let g = Scenario::builtin("so3-generic")?;
    let samples = holonomy_bundle_samples(&g, 8, SEED, STEPS, SignConvention::Oracle)?;
    let loops = random_loops(&g, 100, SEED)?;
    let r = ambrose_singer_verify(&g.connection, &loops, &samples, STEPS, 1e-6, DEFAULT_FLAGGED_LIMIT)?;
    let generic_ok = r.span.rank() == 3 && r.max_log_distance <= 1e-6 && r.verdict;
    parts.push(format!("so3-generic rank {} log {:.1e}", r.span.rank(), r.max_log_distance));

    let red = Scenario::builtin("so3-reducible")?;
    let samples = holonomy_bundle_samples(&red, 8, SEED, STEPS, SignConvention::Oracle)?;
    let span = reduced_algebra(&samples, DEFAULT_RANK_TOLERANCE)?;
    let loops = random_loops(&red, 100, SEED)?;
    let embedding = red.properties.reducible_to.clone().expect("declared embedding");
    let rc = reduction_check(&red.connection, &span, &embedding, &loops, &red.center, STEPS, 1e-6)?;
    let reducible_ok = span.rank() == 1 && rc.max_group_residual <= 1e-6 && rc.verdict;
    parts.push(format!("so3-reducible rank {} group {:.1e}", span.rank(), rc.max_group_residual));

    let flat = Scenario::builtin("flat-plane")?;
    let samples = holonomy_bundle_samples(&flat, 8, SEED, STEPS, SignConvention::Oracle)?;
    let loops = random_loops(&flat, 100, SEED)?;
    let rf = ambrose_singer_verify(&flat.connection, &loops, &samples, STEPS, 1e-6, DEFAULT_FLAGGED_LIMIT)?;
    let flat_ok = rf.span.rank() == 0 && rf.max_identity_distance <= 1e-8;
    parts.push(format!("flat-plane rank {} identity {:.1e}", rf.span.rank(), rf.max_identity_distance));

    outcome(generic_ok && reducible_ok && flat_ok && within(t0.elapsed(), 60.0), parts.join(", "))
}

fn torus_homotopy() -> Result<Outcome> {
    let s = Scenario::builtin("flat-torus")?;
    let families: Vec<_> = s.homotopies.iter().map(|h| h.loops.clone()).collect();
    let report = flatness_check(&s.connection, &s.basepoint, &families, STEPS, 1e-7)?;
    let class_holonomies = families
        .iter()
        .map(|f| holonomy_family(&s.connection, &f[..1], STEPS).map(|r| r[0].element.clone()))
        .collect::<Result<Vec<_>>>()?;
    let mut distinct = true;
    for (i, a) in class_holonomies.iter().enumerate() {
        for b in &class_holonomies[i + 1..] {
            distinct &= a.distance(b) > 1e-3;
        }
    }
    outcome(
        families.len() >= 2
            && families.iter().all(|f| f.len() >= 10)
            && report.max_variation <= 1e-7
            && report.verdict == Flatness::Flat
            && distinct,
        format!(
            "{} classes, variation {:.1e}, verdict {:?}",
            families.len(),
            report.max_variation,
            report.verdict
        ),
    )
}

fn convergence() -> Result<Outcome> {
    let mut ok = true;
    let mut parts = Vec::new();
    for name in builtin_names().into_iter().filter(|n| *n != "flat-plane") {
        let s = Scenario::builtin(name)?;
        let path = convergence_path(&s)?;
        let e = [250, 500, 1000]
            .iter()
            .map(|&n| transport_operator(&s.connection, &path, n).map(|p| p.last()))
            .collect::<Result<Vec<_>>>()?;
        let order = (e[0].distance(&e[1]) / e[1].distance(&e[2])).log2();
        ok &= (3.5..=4.5).contains(&order);
        parts.push(format!("{name} {order:.2}"));
    }
    outcome(ok, parts.join(", "))
}

fn diffeology_family() -> Result<Outcome> {
    let family = candidate_family();
    let props = check_family_properties(&family)?;
    let failed: Vec<&str> = props.iter().filter(|p| !p.passed()).map(|p| p.name.as_str()).collect();
    let line = OpenBox::new(vec![-1.0], vec![1.0])?;
    let r1 = Diffeology::standard(1);
    let abs = Plot::from_fn("abs", line.clone(), 1, |u| vec![u[0].abs()]);
    let poly = Plot::from_fn("poly", line, 1, |u| vec![1.0 - 2.0 * u[0] + u[0].powi(3)]);
    let abs_rejected = !is_plot(&abs, &r1, 8)?.is_accepted();
    let poly_accepted = is_plot(&poly, &r1, 8)?.is_accepted();
    outcome(
        family.len() >= 50 && failed.is_empty() && abs_rejected && poly_accepted,
        format!(
            "{} candidates, failed properties {failed:?}, |t| rejected {abs_rejected}, polynomial accepted {poly_accepted}",
            family.len()
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Result<Outcome>); 10] = [
        ("sphere_latitude_holonomy", sphere_latitudes),
        ("abelian_stokes", abelian_stokes),
        ("path_lifting_axioms", axioms),
        ("holonomy_group_laws", group_laws),
        ("radial_gauge_evolution_identity", plaques),
        ("curvature_sign_oracle", curvature_sign),
        ("ambrose_singer_reduction", ambrose_singer),
        ("flat_torus_homotopy_invariance", torus_homotopy),
        ("integrator_convergence_order", convergence),
        ("diffeology_family_properties", diffeology_family),
    ];
    let mut failures = 0;
    for (name, run) in criteria {
        let t0 = Instant::now();
        let result = run();
        let secs = t0.elapsed().as_secs_f64();
        match result {
            Ok(o) => {
                println!("{} {name} [{secs:.2} s]: {}", if o.passed { "PASS" } else { "FAIL" }, o.detail);
                failures += usize::from(!o.passed);
            }
            Err(e) => {
                println!("FAIL {name} [{secs:.2} s]: error: {e}");
                failures += 1;
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
