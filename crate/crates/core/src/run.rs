//! Command pipelines behind the CLI. Each command loads nothing itself: it
//! takes a validated scenario and parameters and returns a [`RunReport`]
//! whose checks decide the exit status.

use std::f64::consts::{PI, TAU};
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};

use crate::bundle::{horizontal_lift, transport_operator, MIN_LIFT_STEPS};
use crate::curvature::{
    abelian_stokes_check, ambrose_singer_verify, curvature_at, default_fd_step, plaques_convergence, reduced_algebra,
    reduction_check, sign_oracle_check, small_loop_oracle, ReductionReport, SignConvention, DEFAULT_FLAGGED_LIMIT,
    PLAQUES_S, SIGN_ORACLE_TOL, STOKES_BOUNDARY_SAMPLES,
};
use crate::error::{HolabError, Result};
use crate::holonomy::{
    axiom_suite, flatness_check, group_law_residuals, holonomy_family, Axiom, Flatness, HolonomyRecord, Loop,
};
use crate::liealg::{frobenius_dot, AlgebraBasis, GroupElement, Mat, DEFAULT_RANK_TOLERANCE};
use crate::report::{Cell, Check, ReportParams, RunReport, Table};
use crate::scenario::{
    axiom_cases, convergence_path, holonomy_bundle_samples, probe_points, random_loops, Expectation, Scenario,
};

pub const DEFAULT_STEPS: usize = 1000;
pub const DEFAULT_TOL: f64 = 1e-6;
pub const DEFAULT_LOOPS: usize = 100;
pub const DEFAULT_AXIOM_CASES: usize = 20;
pub const DEFAULT_SEED: u64 = 42;

/// Smallest step count: the coarsest of the `N/4, N/2, N` studies still
/// needs [`MIN_LIFT_STEPS`].
pub const MIN_STEPS: usize = 4 * MIN_LIFT_STEPS;
pub const MAX_STEPS: usize = 1_000_000;
pub const MAX_LOOPS: usize = 100_000;

/// Group laws compose up to three lifts, so they are checked at `10 tol`.
pub const GROUP_LAW_TOL_FACTOR: f64 = 10.0;
pub const STOKES_TOL: f64 = 1e-4;
pub const STOKES_MAX_LOOPS: usize = 20;
pub const PLAQUES_TOL: f64 = 1e-4;
pub const PLAQUES_MIN_ORDER: f64 = 1.8;
pub const LIFT_ORDER_RANGE: (f64, f64) = (3.5, 4.5);
/// Endpoint differences below this are round-off; no order is fitted.
pub const ROUNDOFF_FLOOR: f64 = 1e-14;
/// Arcs whose horizontal lifts carry the curvature samples.
pub const SAMPLE_ARCS: usize = 8;
/// Small-loop size as a fraction of the loop radius.
pub const SMALL_LOOP_FRACTION: f64 = 0.2;
/// Rows kept from a lifted path in the transport table.
const LIFT_TABLE_ROWS: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Transport,
    Holonomy,
    Axioms,
    Curvature,
    Plaques,
    Asverify,
    Reduce,
}

impl Command {
    pub const ALL: [Command; 7] = [
        Command::Transport,
        Command::Holonomy,
        Command::Axioms,
        Command::Curvature,
        Command::Plaques,
        Command::Asverify,
        Command::Reduce,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Transport => "transport",
            Command::Holonomy => "holonomy",
            Command::Axioms => "axioms",
            Command::Curvature => "curvature",
            Command::Plaques => "plaques",
            Command::Asverify => "asverify",
            Command::Reduce => "reduce",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == s)
    }
}

#[derive(Clone, Debug)]
pub struct Params {
    pub steps: usize,
    pub tol: f64,
    /// Random loops (or axiom cases); `None` picks the command default.
    pub loops: Option<usize>,
    pub seed: u64,
    pub sign_convention: SignConvention,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            steps: DEFAULT_STEPS,
            tol: DEFAULT_TOL,
            loops: None,
            seed: DEFAULT_SEED,
            sign_convention: SignConvention::Oracle,
        }
    }
}

impl Params {
    pub fn loops_for(&self, command: Command) -> usize {
        self.loops.unwrap_or(match command {
            Command::Axioms => DEFAULT_AXIOM_CASES,
            _ => DEFAULT_LOOPS,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !(MIN_STEPS..=MAX_STEPS).contains(&self.steps) {
            return Err(HolabError::Input(format!("steps must lie in [{MIN_STEPS}, {MAX_STEPS}]")));
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(HolabError::Input("tol must be positive and finite".into()));
        }
        if let Some(n) = self.loops {
            if !(1..=MAX_LOOPS).contains(&n) {
                return Err(HolabError::Input(format!("loops must lie in [1, {MAX_LOOPS}]")));
            }
        }
        Ok(())
    }
}

/// Caps the rayon pool at `HOLAB_THREADS` when set. Returns the cap.
pub fn configure_threads_from_env() -> Result<Option<usize>> {
    let Ok(v) = std::env::var("HOLAB_THREADS") else {
        return Ok(None);
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n >= 1)
        .ok_or_else(|| HolabError::Input(format!("HOLAB_THREADS must be a positive integer, got '{v}'")))?;
    // A pool built earlier in the process wins; the cap is then advisory.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(Some(n))
}

pub fn run_command(command: Command, scenario: &Scenario, params: &Params) -> Result<RunReport> {
    params.validate()?;
    let t0 = Instant::now();
    let mut report = RunReport {
        scenario: scenario.name.clone(),
        command: command.name().to_string(),
        params: ReportParams {
            steps: params.steps,
            tol: params.tol,
            loops: params.loops_for(command),
            seed: params.seed,
            sign_convention: params.sign_convention.name().to_string(),
        },
        tables: Vec::new(),
        checks: Vec::new(),
        passed: false,
        warnings: Vec::new(),
        detail: Value::Null,
        timing: 0.0,
    };
    let run = match command {
        Command::Transport => transport(scenario, params, &mut report),
        Command::Holonomy => holonomy(scenario, params, &mut report),
        Command::Axioms => axioms(scenario, params, &mut report),
        Command::Curvature => curvature(scenario, params, &mut report),
        Command::Plaques => plaques(scenario, params, &mut report),
        Command::Asverify => asverify(scenario, params, &mut report),
        Command::Reduce => reduce(scenario, params, &mut report),
    };
    run.map_err(|e| e.context(format!("{} on scenario '{}'", command.name(), scenario.name)))?;
    report.passed = report.checks.iter().all(|c| c.passed);
    report.timing = t0.elapsed().as_secs_f64();
    Ok(report)
}

fn mat_rows(m: &Mat) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

fn mat_cells(m: &Mat) -> Vec<Cell> {
    mat_rows(m).into_iter().flatten().map(Cell::Num).collect()
}

fn mat_columns(prefix: &str, n: usize) -> Vec<String> {
    (0..n).flat_map(|i| (0..n).map(move |j| format!("{prefix}{i}{j}"))).collect()
}

/// Coordinates of `m` in `basis`, by the Gram system.
fn basis_coordinates(basis: &AlgebraBasis, m: &Mat) -> Vec<f64> {
    let els = basis.elements();
    let k = els.len();
    let gram = Mat::from_fn(k, k, |i, j| frobenius_dot(els[i].matrix(), els[j].matrix()));
    let rhs = nalgebra::DVector::from_iterator(k, els.iter().map(|b| frobenius_dot(b.matrix(), m)));
    gram.lu()
        .solve(&rhs)
        .map(|c| c.iter().copied().collect())
        .unwrap_or_else(|| vec![f64::NAN; k])
}

/// Rotation angle of a holonomy in a 1-dimensional group: the coordinate
/// of its principal log, or `atan2` when the log is unavailable.
fn holonomy_angle(basis: &AlgebraBasis, rec: &HolonomyRecord) -> f64 {
    match &rec.log {
        Some(l) => basis_coordinates(basis, l.matrix())[0],
        None => {
            let m = rec.element.matrix();
            m[(1, 0)].atan2(m[(0, 0)])
        }
    }
}

fn wrap_angle(a: f64) -> f64 {
    (a + PI).rem_euclid(TAU) - PI
}

fn strings(cols: &[String]) -> Vec<&str> {
    cols.iter().map(String::as_str).collect()
}

fn transport(s: &Scenario, p: &Params, r: &mut RunReport) -> Result<()> {
    let conn = &s.connection;
    let n = conn.tag().size();
    let path = convergence_path(s)?;
    let start = GroupElement::identity(conn.tag());
    let lift = horizontal_lift(conn, &path, &start, p.steps)?;

    let mut cols = vec!["t".to_string()];
    cols.extend((0..conn.base_dim()).map(|k| format!("x{k}")));
    cols.extend(mat_columns("g", n));
    let mut table = Table::new("lift", &strings(&cols));
    let stride = (p.steps / LIFT_TABLE_ROWS).max(1);
    for i in (0..=p.steps).step_by(stride) {
        let mut row = vec![Cell::Num(lift.time(i))];
        row.extend(lift.base_points()[i].iter().map(|x| Cell::Num(*x)));
        row.extend(mat_cells(lift.fiber_at(i).matrix()));
        table.push(row);
    }
    r.tables.push(table);

    let projection = lift.projection_residual(&path);
    let relation = lift.max_relation_residual();
    let horizontality = lift.horizontality_residual(conn, &path)?;
    r.checks.push(Check::at_most("projection_residual", projection, p.tol));
    r.checks.push(Check::at_most("group_relation_residual", relation, p.tol));
    r.checks.push(Check::at_most("horizontality_residual", horizontality, p.tol));

    let counts = [p.steps / 4, p.steps / 2, p.steps];
    let ends = counts
        .iter()
        .map(|&k| transport_operator(conn, &path, k).map(|g| g.last()))
        .collect::<Result<Vec<_>>>()?;
    let diffs = [ends[0].distance(&ends[1]), ends[1].distance(&ends[2])];
    let mut conv = Table::new("convergence", &["steps", "difference_to_refined"]).with_plot(
        "endpoint difference under 2x refinement",
        0,
        &[1],
        true,
    );
    conv.push(vec![counts[0].into(), diffs[0].into()]);
    conv.push(vec![counts[1].into(), diffs[1].into()]);
    r.tables.push(conv);
    let order = (diffs[0] / diffs[1]).log2();
    if diffs[1] > ROUNDOFF_FLOOR {
        r.checks.push(Check::within("lift_convergence_order", order, LIFT_ORDER_RANGE.0, LIFT_ORDER_RANGE.1));
    } else {
        r.warnings.push(format!(
            "endpoint differences at round-off ({:.3e}); convergence order not fitted",
            diffs[1]
        ));
    }
    r.detail = json!({
        "path": path.label(),
        "end_fiber": mat_rows(lift.end().matrix()),
        "convergence_steps": counts,
        "convergence_differences": diffs,
        "convergence_order": order,
    });
    Ok(())
}

fn holonomy(s: &Scenario, p: &Params, r: &mut RunReport) -> Result<()> {
    let conn = &s.connection;
    let basis = conn.basis();
    let one_dim = basis.dim() == 1;
    let family_loops = s.family_loops();
    let randoms = random_loops(s, p.loops_for(Command::Holonomy), p.seed)?;
    let all: Vec<Loop> = family_loops.iter().chain(&randoms).cloned().collect();
    let records = holonomy_family(conn, &all, p.steps)?;

    let mut cols = vec!["loop".to_string(), "angle".to_string(), "distance_to_identity".to_string()];
    cols.extend((0..basis.dim()).map(|k| format!("log_{k}")));
    cols.push("relation_residual".into());
    let mut table = Table::new("holonomy", &strings(&cols));
    for rec in &records {
        let mut row: Vec<Cell> = vec![
            rec.loop_id.clone().into(),
            if one_dim { holonomy_angle(basis, rec) } else { f64::NAN }.into(),
            rec.distance_to_identity().into(),
        ];
        let coords = match &rec.log {
            Some(l) => basis_coordinates(basis, l.matrix()),
            None => vec![f64::NAN; basis.dim()],
        };
        row.extend(coords.into_iter().map(Cell::Num));
        row.push(rec.relation_residual.into());
        table.push(row);
    }
    r.tables.push(table);
    let relation = records.iter().map(|x| x.relation_residual).fold(0.0, f64::max);
    r.checks.push(Check::at_most("group_relation_residual", relation, p.tol));

    for e in &s.expectations {
        let Expectation::HolonomyAngle { family, angle } = e else {
            continue;
        };
        let fam = s.family(family).expect("validated at load");
        if !one_dim {
            return Err(HolabError::Input(format!(
                "holonomy angle expectations need a 1-dimensional algebra, '{}' has dimension {}",
                s.name,
                basis.dim()
            )));
        }
        let recs = holonomy_family(conn, &fam.loops, p.steps)?;
        let x_col = if fam.param_names.len() == 1 { fam.param_names[0].as_str() } else { "index" };
        let mut t = Table::new(format!("angle {family}"), &[x_col, "angle", "expected"])
            .with_plot(format!("holonomy angle along '{family}'"), 0, &[1, 2], false);
        let mut worst = 0.0_f64;
        for (k, (rec, params)) in recs.iter().zip(&fam.params).enumerate() {
            let got = holonomy_angle(basis, rec);
            let want = angle.eval(params);
            worst = worst.max(wrap_angle(got - want).abs());
            let x = if fam.param_names.len() == 1 { params[0] } else { k as f64 };
            // The expected column is unwrapped; shift the measured angle
            // onto its branch so the two curves overlay.
            t.push(vec![x.into(), (want + wrap_angle(got - want)).into(), want.into()]);
        }
        r.tables.push(t);
        r.checks.push(Check::at_most(format!("angle_error[{family}]"), worst, p.tol));
    }

    if s.properties.flat && s.chart.periods().is_some() {
        winding_products(s, p, r)?;
    }

    let pairs = randoms.len() / 2;
    if pairs > 0 {
        let mut worst = [0.0_f64; 4];
        for i in 0..pairs {
            let (a, b, c) = (&randoms[2 * i], &randoms[2 * i + 1], &randoms[(2 * i + 2) % randoms.len()]);
            let g = group_law_residuals(conn, a, b, c, p.steps)?;
            for (w, v) in worst.iter_mut().zip([g.composition, g.inverse, g.associativity, g.reparametrization]) {
                *w = w.max(v);
            }
        }
        let bound = GROUP_LAW_TOL_FACTOR * p.tol;
        for (name, v) in ["composition", "inverse", "associativity", "reparametrization"].iter().zip(worst) {
            r.checks.push(Check::at_most(format!("group_law_{name}"), v, bound));
        }
    }

    let families: Vec<Vec<Loop>> = s.homotopies.iter().map(|h| h.loops.clone()).collect();
    let mut flat_detail = Value::Null;
    if !families.is_empty() {
        let f = flatness_check(conn, &s.basepoint, &families, p.steps, p.tol)?;
        let mut t = Table::new("homotopies", &["homotopy", "loops", "variation", "max_identity_distance"]);
        for (h, fam) in s.homotopies.iter().zip(&f.families) {
            t.push(vec![
                h.name.clone().into(),
                fam.loops.into(),
                fam.variation.into(),
                fam.max_identity_distance.into(),
            ]);
        }
        r.tables.push(t);
        for e in &s.expectations {
            if let Expectation::Flatness(want) = e {
                r.checks.push(Check::holds(
                    "flatness_verdict",
                    f.verdict == *want,
                    format!("verdict {:?} equals declared {:?}", f.verdict, want),
                ));
            }
        }
        if !s.expectations.iter().any(|e| matches!(e, Expectation::Flatness(_))) {
            let declared = s.properties.flat;
            r.checks.push(Check::holds(
                "flatness_matches_declaration",
                declared == (f.verdict != Flatness::NotFlat),
                format!("declared flat = {declared}, verdict {:?}", f.verdict),
            ));
        }
        flat_detail = serde_json::to_value(&f)?;
    }
    r.detail = json!({ "flatness": flat_detail, "family_loops": family_loops.len(), "random_loops": randoms.len() });
    Ok(())
}

/// On a flat periodic chart, the holonomy of a single-loop family whose
/// winding is the sum of two others is the product of theirs, and all
/// such holonomies commute.
fn winding_products(s: &Scenario, p: &Params, r: &mut RunReport) -> Result<()> {
    let singles: Vec<&Loop> = s
        .loop_families
        .iter()
        .filter(|f| f.loops.len() == 1)
        .map(|f| &f.loops[0])
        .collect();
    let e = GroupElement::identity(s.connection.tag());
    let hols: Vec<GroupElement> = singles
        .iter()
        .map(|l| crate::holonomy::holonomy_element(&s.connection, l, &e, p.steps).map(|x| x.element))
        .collect::<Result<_>>()?;
    let close = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-9);
    let (mut product, mut commutator, mut found) = (0.0_f64, 0.0_f64, false);
    for (i, a) in singles.iter().enumerate() {
        for (j, b) in singles.iter().enumerate().skip(i + 1) {
            let (ha, hb) = (&hols[i], &hols[j]);
            commutator = commutator.max((ha * hb).distance(&(hb * ha)));
            let sum: Vec<f64> = a.offset().iter().zip(b.offset()).map(|(x, y)| x + y).collect();
            for (k, c) in singles.iter().enumerate() {
                if k != i && k != j && close(c.offset(), &sum) {
                    product = product.max(hols[k].distance(&(hb * ha)));
                    found = true;
                }
            }
        }
    }
    r.checks.push(Check::at_most("winding_holonomies_commute", commutator, p.tol));
    if found {
        r.checks.push(Check::at_most("winding_sum_is_product", product, p.tol));
    }
    Ok(())
}

fn axioms(s: &Scenario, p: &Params, r: &mut RunReport) -> Result<()> {
    let cases = axiom_cases(s, p.loops_for(Command::Axioms), p.seed)?;
    let rep = axiom_suite(&s.connection, &cases, p.steps, p.tol);
    let mut t = Table::new("axioms", &["axiom", "max_residual", "passed"]);
    for a in &rep.summary {
        t.push(vec![a.axiom.name().into(), a.max_residual.into(), a.passed.into()]);
        r.checks.push(Check::at_most(format!("axiom_{}", a.axiom.name()), a.max_residual, p.tol));
    }
    r.tables.push(t);
    let mut cols = vec!["case".to_string()];
    cols.extend(Axiom::ALL.iter().map(|a| a.name().to_string()));
    cols.extend(["reflexivity", "verdicts_agree", "error"].map(String::from));
    let mut ct = Table::new("cases", &strings(&cols));
    for c in &rep.cases {
        let mut row: Vec<Cell> = vec![c.label.clone().into()];
        row.extend(c.residuals.iter().map(|x| Cell::Num(*x)));
        row.push(c.reflexivity.into());
        row.push(c.verdicts_agree().into());
        row.push(c.error.clone().unwrap_or_default().into());
        ct.push(row);
    }
    r.tables.push(ct);
    r.checks.push(Check::holds(
        "start_independence_verdicts_consistent",
        rep.verdicts_consistent,
        "triviality verdicts agree across fiber starts",
    ));
    let errors = rep.cases.iter().filter(|c| c.error.is_some()).count();
    r.checks.push(Check::at_most("case_errors", errors as f64, 0.0));
    if rep.reflexivity_flagged {
        r.warnings.push(format!(
            "reflexivity residual {:.3e} exceeds tol: integrator accuracy, not an axiom failure",
            rep.reflexivity_max
        ));
    }
    r.detail = serde_json::to_value(&rep)?;
    Ok(())
}

fn curvature(s: &Scenario, p: &Params, r: &mut RunReport) -> Result<()> {
    let conn = &s.connection;
    let basis = conn.basis();
    let d = conn.base_dim();
    let h = default_fd_step(conn);
    let points = probe_points(s);

    let mut cols: Vec<String> = (0..d).map(|k| format!("x{k}")).collect();
    cols.extend(["i", "j"].map(String::from));
    cols.extend((0..basis.dim()).map(|k| format!("F_{k}")));
    let mut t = Table::new("curvature", &strings(&cols));
    for x in &points {
        for i in 0..d {
            for j in i + 1..d {
                let (mut v, mut w) = (vec![0.0; d], vec![0.0; d]);
                v[i] = 1.0;
                w[j] = 1.0;
                let f = curvature_at(conn, x, &v, &w, h, p.sign_convention)?;
                let mut row: Vec<Cell> = x.iter().map(|c| Cell::Num(*c)).collect();
                row.push(i.into());
                row.push(j.into());
                row.extend(basis_coordinates(basis, f.matrix()).into_iter().map(Cell::Num));
                t.push(row);
            }
        }
    }
    r.tables.push(t);

    let eps = SMALL_LOOP_FRACTION * s.loop_radius;
    let oracle = sign_oracle_check(conn, &points, eps, p.steps)?;
    let mut ot = Table::new("sign_oracle", &["point", "i", "j", "oracle_mismatch", "paper_mismatch"]);
    for (k, pt) in oracle.points.iter().enumerate() {
        ot.push(vec![
            format!("{k}").into(),
            pt.pair.0.into(),
            pt.pair.1.into(),
            pt.oracle_mismatch.into(),
            pt.paper_mismatch.into(),
        ]);
    }
    r.tables.push(ot);
    let chosen = match p.sign_convention {
        SignConvention::Oracle => oracle.max_oracle_mismatch,
        SignConvention::Paper => oracle.max_paper_mismatch,
    };
    r.checks.push(Check::at_most(
        format!("small_loop_limit_vs_{}_convention", p.sign_convention.name()),
        chosen,
        SIGN_ORACLE_TOL,
    ));

    if d >= 2 {
        let (mut v, mut w) = (vec![0.0; d], vec![0.0; d]);
        v[0] = 1.0;
        w[1] = 1.0;
        let f = curvature_at(conn, &s.basepoint, &v, &w, h, SignConvention::Oracle)?;
        let mut st = Table::new("small_loop", &["eps", "error"]).with_plot(
            "small-loop holonomy error at the basepoint",
            0,
            &[1],
            true,
        );
        for k in 0..4 {
            let e = eps / f64::powi(2.0, k);
            let val = small_loop_oracle(conn, &s.basepoint, &v, &w, e, p.steps)?;
            st.push(vec![e.into(), (val.matrix() - f.matrix()).norm().into()]);
        }
        r.tables.push(st);
    }

    if d == 2 && basis.dim() == 1 {
        let loops = random_loops(s, p.loops_for(Command::Curvature).min(STOKES_MAX_LOOPS), p.seed)?;
        let mut stokes = Table::new("stokes", &["loop", "flux", "relative_error"]);
        let mut worst = 0.0_f64;
        for lp in &loops {
            let c = abelian_stokes_check(conn, lp, p.steps, STOKES_BOUNDARY_SAMPLES)?;
            worst = worst.max(c.relative_error);
            stokes.push(vec![lp.id().into(), c.flux.into(), c.relative_error.into()]);
        }
        r.tables.push(stokes);
        r.checks.push(Check::at_most("abelian_stokes_relative_error", worst, STOKES_TOL));
    }
    r.detail = serde_json::to_value(&oracle)?;
    Ok(())
}

fn plaques(s: &Scenario, p: &Params, r: &mut RunReport) -> Result<()> {
    let c = convergence_path(s)?;
    let counts = [p.steps / 4, p.steps / 2, p.steps];
    let conv = plaques_convergence(&s.connection, &s.center, &c, &counts, p.sign_convention)?;
    let mut t = Table::new("convergence", &["steps", "residual", "rhs_scale"]).with_plot(
        "radial-gauge evolution residual",
        0,
        &[1],
        true,
    );
    for run in &conv.runs {
        t.push(vec![run.steps.into(), run.residual.into(), run.rhs_scale.into()]);
    }
    r.tables.push(t);
    let finest = conv.runs.last().expect("three runs");
    let mut ps = Table::new("per_s", &["s", "residual"]);
    for (sv, res) in PLAQUES_S.iter().zip(&finest.per_s) {
        ps.push(vec![(*sv).into(), (*res).into()]);
    }
    r.tables.push(ps);
    r.checks.push(Check::at_most("evolution_residual", finest.residual, PLAQUES_TOL));
    if finest.residual > ROUNDOFF_FLOOR {
        let order = conv.orders.iter().copied().fold(f64::INFINITY, f64::min);
        r.checks.push(Check::at_least("evolution_order", order, PLAQUES_MIN_ORDER));
    } else {
        r.warnings.push("evolution residual at round-off; order not fitted".into());
    }
    r.detail = serde_json::to_value(&conv)?;
    Ok(())
}

/// JSON form of a reduction report; the span appears as its basis matrices.
pub fn reduction_json(rep: &ReductionReport) -> Result<Value> {
    let basis: Vec<Vec<Vec<f64>>> = rep.span.basis().iter().map(|b| mat_rows(b.matrix())).collect();
    Ok(json!({
        "span": {
            "algebra": rep.span.tag().algebra_name(),
            "rank": rep.span.rank(),
            "basis": basis,
        },
        "embedding": rep.embedding,
        "tol": rep.tol,
        "steps": rep.steps,
        "loops": serde_json::to_value(&rep.loops)?,
        "max_curvature_residual": rep.curvature_residuals.iter().copied().fold(0.0, f64::max),
        "connection": rep.connection,
        "ad_stability": rep.ad_stability,
        "flagged_fraction": rep.flagged_fraction,
        "max_log_distance": rep.max_log_distance,
        "max_group_residual": rep.max_group_residual,
        "max_identity_distance": rep.max_identity_distance,
        "verdict": rep.verdict,
    }))
}

fn reduction_tables(rep: &ReductionReport, r: &mut RunReport) {
    let n = rep.span.tag().size();
    let mut cols = vec!["index".to_string()];
    cols.extend(mat_columns("m", n));
    let mut t = Table::new("span", &strings(&cols));
    for (k, b) in rep.span.basis().iter().enumerate() {
        let mut row = vec![Cell::from(k)];
        row.extend(mat_cells(b.matrix()));
        t.push(row);
    }
    r.tables.push(t);
    let mut lt = Table::new(
        "loops",
        &["loop", "log_distance", "group_residual", "identity_distance", "flagged"],
    );
    for l in &rep.loops {
        lt.push(vec![
            l.loop_id.clone().into(),
            l.log_distance.unwrap_or(f64::NAN).into(),
            l.group_residual.unwrap_or(f64::NAN).into(),
            l.identity_distance.into(),
            l.flagged.clone().unwrap_or_default().into(),
        ]);
    }
    r.tables.push(lt);
}

fn rank_checks(s: &Scenario, rank: usize, r: &mut RunReport) {
    for e in &s.expectations {
        if let Expectation::ReducedRank(want) = e {
            r.checks.push(Check::holds(
                "reduced_algebra_rank",
                rank == *want,
                format!("rank {rank} equals declared {want}"),
            ));
        }
    }
}

fn asverify(s: &Scenario, p: &Params, r: &mut RunReport) -> Result<()> {
    let samples = holonomy_bundle_samples(s, SAMPLE_ARCS, p.seed, p.steps, p.sign_convention)?;
    let loops = random_loops(s, p.loops_for(Command::Asverify), p.seed)?;
    let rep = ambrose_singer_verify(&s.connection, &loops, &samples, p.steps, p.tol, DEFAULT_FLAGGED_LIMIT)?;
    reduction_tables(&rep, r);
    rank_checks(s, rep.span.rank(), r);
    r.checks.push(Check::at_most("max_log_distance", rep.max_log_distance, p.tol));
    r.checks.push(Check::at_most("ad_stability", rep.ad_stability, p.tol));
    r.checks.push(Check::at_most("flagged_fraction", rep.flagged_fraction, DEFAULT_FLAGGED_LIMIT));
    r.checks.push(Check::holds("verdict", rep.verdict, "holonomy logs lie in the curvature span"));
    r.detail = reduction_json(&rep)?;
    Ok(())
}

fn reduce(s: &Scenario, p: &Params, r: &mut RunReport) -> Result<()> {
    let embedding = s.properties.reducible_to.clone().ok_or_else(|| {
        HolabError::Precondition(format!("scenario '{}' declares no reducible_to embedding", s.name))
    })?;
    let samples = holonomy_bundle_samples(s, SAMPLE_ARCS, p.seed, p.steps, p.sign_convention)?;
    let span = reduced_algebra(&samples, DEFAULT_RANK_TOLERANCE)?;
    let loops = random_loops(s, p.loops_for(Command::Reduce), p.seed)?;
    let rep = reduction_check(&s.connection, &span, &embedding, &loops, &s.center, p.steps, p.tol)?;
    reduction_tables(&rep, r);
    rank_checks(s, rep.span.rank(), r);
    r.checks.push(Check::at_most("max_log_distance", rep.max_log_distance, p.tol));
    r.checks.push(Check::at_most("max_group_residual", rep.max_group_residual, p.tol));
    if let Some(c) = &rep.connection {
        r.checks.push(Check::at_most("connection_in_span", c.max(), p.tol));
    }
    r.checks.push(Check::holds("verdict", rep.verdict, "holonomy and connection reduce to the embedded group"));
    r.detail = reduction_json(&rep)?;
    Ok(())
}
