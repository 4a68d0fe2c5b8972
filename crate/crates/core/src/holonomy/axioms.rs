use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::loops::Loop;
use super::record::{holonomy_element, IDENTITY_TOL};
use crate::bundle::{horizontal_lift, parallel_transport, ConnectionData, SmoothPath};
use crate::error::{HolabError, Result};
use crate::liealg::{exp_mat, GroupElement, MatrixAlgebra};

/// Times at which reparametrization equivariance is compared.
pub const REPARAM_TIMES: [f64; 4] = [0.25, 0.5, 0.8, 1.0];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Axiom {
    Projection,
    Concatenation,
    Reparametrization,
    Backtracking,
    InitialCondition,
    StartIndependence,
}

impl Axiom {
    pub const ALL: [Axiom; 6] = [
        Axiom::Projection,
        Axiom::Concatenation,
        Axiom::Reparametrization,
        Axiom::Backtracking,
        Axiom::InitialCondition,
        Axiom::StartIndependence,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Axiom::Projection => "i_projection",
            Axiom::Concatenation => "ii_concatenation",
            Axiom::Reparametrization => "iii_reparametrization",
            Axiom::Backtracking => "iv_backtracking",
            Axiom::InitialCondition => "v_initial_condition",
            Axiom::StartIndependence => "vi_start_independence",
        }
    }
}

/// One suite case: a path with a continuation from its endpoint, a loop,
/// a start fiber and a sample of further start fibers for axiom (vi).
#[derive(Clone, Debug)]
pub struct AxiomCase {
    pub label: String,
    pub path: SmoothPath,
    pub continuation: SmoothPath,
    pub cycle: Loop,
    pub start: GroupElement,
    pub fiber_starts: Vec<GroupElement>,
    /// `a` in `g(t) = t + a sin(2πt)/(2π)`, `|a| < 1`.
    pub reparam_strength: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CaseOutcome {
    pub label: String,
    /// Indexed like [`Axiom::ALL`]; NaN when the case errored.
    pub residuals: Vec<f64>,
    /// `‖hol(γ⁻¹ ∨ γ) − e‖_F` for the case loop.
    pub reflexivity: f64,
    /// Triviality verdict of the loop at each fiber start.
    pub verdicts: Vec<bool>,
    pub error: Option<String>,
}

impl CaseOutcome {
    pub fn verdicts_agree(&self) -> bool {
        self.verdicts.windows(2).all(|w| w[0] == w[1])
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AxiomSummary {
    pub axiom: Axiom,
    pub max_residual: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct AxiomReport {
    pub tol: f64,
    pub steps: usize,
    pub summary: Vec<AxiomSummary>,
    pub cases: Vec<CaseOutcome>,
    pub verdicts_consistent: bool,
    pub reflexivity_max: f64,
    /// Reflexivity failures point at the integrator, not at an axiom.
    pub reflexivity_flagged: bool,
    pub passed: bool,
}

impl AxiomReport {
    pub fn max_residual(&self, axiom: Axiom) -> f64 {
        self.summary
            .iter()
            .find(|s| s.axiom == axiom)
            .map(|s| s.max_residual)
            .unwrap_or(f64::NAN)
    }
}

/// `count` group elements `exp(X)` with `X` uniform in a box of the
/// standard basis coordinates.
pub fn fiber_sample(tag: MatrixAlgebra, count: usize, seed: u64) -> Result<Vec<GroupElement>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let basis = tag.standard_basis();
    (0..count)
        .map(|_| {
            let c: Vec<f64> = (0..basis.dim()).map(|_| rng.random_range(-1.5..1.5)).collect();
            let x = basis.combine(&c)?;
            GroupElement::new(exp_mat(x.matrix())?, tag)
        })
        .collect()
}

fn run_case(conn: &ConnectionData, case: &AxiomCase, steps: usize) -> Result<CaseOutcome> {
    if !(case.reparam_strength.abs() < 1.0) {
        return Err(HolabError::Input("reparametrization strength must satisfy |a| < 1".into()));
    }
    let start = &case.start;
    let lift = horizontal_lift(conn, &case.path, start, steps)?;

    let projection = lift.projection_residual(&case.path);
    let initial = lift.fiber_at(0).distance(start);

    let g1 = lift.end();
    let tail = horizontal_lift(conn, &case.continuation, &g1, steps)?;
    let joined = SmoothPath::concat(&case.continuation, &case.path)?;
    let joined_lift = horizontal_lift(conn, &joined, start, steps)?;
    let mid = parallel_transport(conn, &joined, 0.5, start, steps)?;
    let concatenation = joined_lift.end().distance(&tail.end()).max(mid.distance(&g1));
    let projection = projection.max(joined_lift.projection_residual(&joined));

    let a = case.reparam_strength;
    let tau = std::f64::consts::TAU;
    let g = move |t: f64| t + a * (tau * t).sin() / tau;
    let reparam = case
        .path
        .reparametrize(Arc::new(g), Arc::new(move |t: f64| 1.0 + a * (tau * t).cos()));
    let mut reparametrization = 0.0_f64;
    for &t in &REPARAM_TIMES {
        let lhs = parallel_transport(conn, &reparam, t, start, steps)?;
        let rhs = parallel_transport(conn, &case.path, g(t), start, steps)?;
        reparametrization = reparametrization.max(lhs.distance(&rhs));
    }

    let back = SmoothPath::concat(&case.path.reverse(), &case.path)?;
    let backtracking = horizontal_lift(conn, &back, start, steps)?.end().distance(start);

    let e = GroupElement::identity(conn.tag());
    let base = holonomy_element(conn, &case.cycle, &e, steps)?;
    let mut equivariance = 0.0_f64;
    let mut verdicts = Vec::with_capacity(case.fiber_starts.len() + 1);
    verdicts.push(base.distance_to_identity() <= IDENTITY_TOL);
    for gk in &case.fiber_starts {
        let hk = holonomy_element(conn, &case.cycle, gk, steps)?;
        let predicted = &(&gk.inverse()? * &base.element) * gk;
        equivariance = equivariance.max(hk.element.distance(&predicted));
        verdicts.push(hk.distance_to_identity() <= IDENTITY_TOL);
    }

    let there_and_back = Loop::concat(&case.cycle.reverse(), &case.cycle)?;
    let reflexivity = holonomy_element(conn, &there_and_back, &e, steps)?.distance_to_identity();

    Ok(CaseOutcome {
        label: case.label.clone(),
        residuals: vec![
            projection,
            concatenation,
            reparametrization,
            backtracking,
            initial,
            equivariance,
        ],
        reflexivity,
        verdicts,
        error: None,
    })
}

/// Checks the six path-lifting axioms on the horizontal lifts of `conn`.
/// Case failures (including lift errors) become report entries.
pub fn axiom_suite(conn: &ConnectionData, cases: &[AxiomCase], steps: usize, tol: f64) -> AxiomReport {
    let outcomes: Vec<CaseOutcome> = cases
        .par_iter()
        .map(|case| {
            run_case(conn, case, steps).unwrap_or_else(|err| CaseOutcome {
                label: case.label.clone(),
                residuals: vec![f64::NAN; Axiom::ALL.len()],
                reflexivity: f64::NAN,
                verdicts: Vec::new(),
                error: Some(err.to_string()),
            })
        })
        .collect();
    let verdicts_consistent = outcomes.iter().all(CaseOutcome::verdicts_agree);
    let summary: Vec<AxiomSummary> = Axiom::ALL
        .iter()
        .enumerate()
        .map(|(k, &axiom)| {
            let max_residual = outcomes
                .iter()
                .map(|o| o.residuals[k])
                .fold(0.0_f64, |m, r| if r.is_nan() || m.is_nan() { f64::NAN } else { m.max(r) });
            let mut passed = max_residual <= tol;
            if axiom == Axiom::StartIndependence {
                passed &= verdicts_consistent;
            }
            AxiomSummary {
                axiom,
                max_residual,
                passed,
            }
        })
        .collect();
    let reflexivity_max = outcomes
        .iter()
        .map(|o| o.reflexivity)
        .fold(0.0_f64, |m, r| if r.is_nan() || m.is_nan() { f64::NAN } else { m.max(r) });
    let passed = summary.iter().all(|s| s.passed) && outcomes.iter().all(|o| o.error.is_none());
    AxiomReport {
        tol,
        steps,
        summary,
        cases: outcomes,
        verdicts_consistent,
        reflexivity_flagged: !(reflexivity_max <= tol),
        reflexivity_max,
        passed,
    }
}
