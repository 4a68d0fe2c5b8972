use rayon::prelude::*;
use serde::Serialize;

use super::loops::Loop;
use crate::bundle::{transport_operator, ConnectionData};
use crate::error::{HolabError, Result};
use crate::liealg::{exp_mat, log_matrix, AlgebraElement, GroupElement};

/// Default Frobenius distance below which a holonomy counts as trivial.
pub const IDENTITY_TOL: f64 = 1e-6;

/// Holonomy `h` of a loop at a start fiber `g₀`: the lift ends at `g₀ h`.
#[derive(Clone, Debug)]
pub struct HolonomyRecord {
    pub loop_id: String,
    pub element: GroupElement,
    /// Principal logarithm; `None` when the element is outside its domain.
    pub log: Option<AlgebraElement>,
    pub log_error: Option<String>,
    /// `‖exp(log) − h‖_F` when the logarithm exists.
    pub log_roundtrip: Option<f64>,
    pub steps: usize,
    pub relation_residual: f64,
}

impl HolonomyRecord {
    pub fn distance_to_identity(&self) -> f64 {
        self.element.distance_to_identity()
    }
}

pub fn holonomy_element(conn: &ConnectionData, lp: &Loop, start: &GroupElement, steps: usize) -> Result<HolonomyRecord> {
    if start.tag() != conn.tag() {
        return Err(HolabError::Shape("start fiber from a different group".into()));
    }
    conn.chart()
        .check(&lp.basepoint())
        .map_err(|e| e.context(format!("basepoint of loop '{}'", lp.id())))?;
    let e = transport_operator(conn, lp.path(), steps)?.last();
    let element = &(&start.inverse()? * &e) * start;
    let (log, log_error, log_roundtrip) = match log_matrix(&element) {
        Ok(l) => {
            let back = exp_mat(l.matrix()).map(|m| (m - element.matrix()).norm()).ok();
            (Some(l), None, back)
        }
        Err(err) => (None, Some(err.to_string()), None),
    };
    Ok(HolonomyRecord {
        loop_id: lp.id().to_string(),
        relation_residual: element.relation_residual(),
        element,
        log,
        log_error,
        log_roundtrip,
        steps,
    })
}

/// Holonomies of `loops` at the identity, computed in parallel and
/// returned in input order.
pub fn holonomy_family(conn: &ConnectionData, loops: &[Loop], steps: usize) -> Result<Vec<HolonomyRecord>> {
    let e = GroupElement::identity(conn.tag());
    loops
        .par_iter()
        .map(|l| holonomy_element(conn, l, &e, steps))
        .collect::<Vec<_>>()
        .into_iter()
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct Equivalence {
    pub equivalent: bool,
    /// `‖hol(γ2⁻¹ ∨ γ) − e‖_F`.
    pub composite_distance: f64,
    /// `‖L_e(γ)(1) − L_e(γ2)(1)‖_F`.
    pub endpoint_distance: f64,
    /// True when both criteria give the same verdict.
    pub consistent: bool,
}

/// `γ ∼ γ2` iff `γ2⁻¹ ∨ γ` has trivial holonomy, cross-checked against the
/// endpoint fibers of the two lifts through the identity.
pub fn loops_equivalent(conn: &ConnectionData, a: &Loop, b: &Loop, steps: usize, tol: f64) -> Result<Equivalence> {
    let (pa, pb) = (a.basepoint(), b.basepoint());
    let gap = pa.iter().zip(&pb).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    if pa.len() != pb.len() || gap > crate::bundle::JOIN_TOL {
        return Err(HolabError::Input(format!(
            "loops '{}' and '{}' have different basepoints",
            a.id(),
            b.id()
        )));
    }
    let e = GroupElement::identity(conn.tag());
    let composite = Loop::concat(&b.reverse(), a)?;
    let composite_distance = holonomy_element(conn, &composite, &e, steps)?.distance_to_identity();
    let ha = holonomy_element(conn, a, &e, steps)?;
    let hb = holonomy_element(conn, b, &e, steps)?;
    let endpoint_distance = ha.element.distance(&hb.element);
    let equivalent = composite_distance <= tol;
    Ok(Equivalence {
        equivalent,
        composite_distance,
        endpoint_distance,
        consistent: equivalent == (endpoint_distance <= tol),
    })
}
