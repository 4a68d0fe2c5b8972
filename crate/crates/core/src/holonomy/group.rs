use std::f64::consts::TAU;
use std::sync::Arc;

use serde::Serialize;

use super::loops::Loop;
use super::record::holonomy_element;
use crate::bundle::{ConnectionData, CurveScalar};
use crate::error::Result;
use crate::liealg::GroupElement;

/// Strength of the monotone reparametrization `t + κ sin(2πt)/2π`.
pub const GROUP_LAW_REPARAM: f64 = 0.4;

/// Frobenius residuals of the holonomy group laws at the identity fiber.
#[derive(Clone, Debug, Serialize)]
pub struct GroupLawResiduals {
    /// `‖hol(b ∨ a) − hol(b) hol(a)‖`.
    pub composition: f64,
    /// `‖hol(a⁻¹) hol(a) − 1‖`.
    pub inverse: f64,
    /// `‖hol((c ∨ b) ∨ a) − hol(c ∨ (b ∨ a))‖`.
    pub associativity: f64,
    /// `‖hol(a ∘ φ) − hol(a)‖` for a monotone `φ` fixing the ends.
    pub reparametrization: f64,
}

impl GroupLawResiduals {
    pub fn max(&self) -> f64 {
        self.composition
            .max(self.inverse)
            .max(self.associativity)
            .max(self.reparametrization)
    }
}

fn hol(conn: &ConnectionData, lp: &Loop, steps: usize) -> Result<GroupElement> {
    Ok(holonomy_element(conn, lp, &GroupElement::identity(conn.tag()), steps)?.element)
}

/// Group laws on loops `a, b, c` with a common basepoint.
pub fn group_law_residuals(conn: &ConnectionData, a: &Loop, b: &Loop, c: &Loop, steps: usize) -> Result<GroupLawResiduals> {
    let (ha, hb) = (hol(conn, a, steps)?, hol(conn, b, steps)?);
    let ba = Loop::concat(b, a)?;
    let composition = hol(conn, &ba, steps)?.distance(&(&hb * &ha));
    let inverse = (&hol(conn, &a.reverse(), steps)? * &ha).distance_to_identity();
    let left = Loop::concat(&Loop::concat(c, b)?, a)?;
    let right = Loop::concat(c, &ba)?;
    let associativity = hol(conn, &left, steps)?.distance(&hol(conn, &right, steps)?);
    let k = GROUP_LAW_REPARAM;
    let phi: CurveScalar = Arc::new(move |t: f64| t + k * (TAU * t).sin() / TAU);
    let dphi: CurveScalar = Arc::new(move |t: f64| 1.0 + k * (TAU * t).cos());
    let reparametrization = hol(conn, &a.reparametrize(phi, dphi), steps)?.distance(&ha);
    Ok(GroupLawResiduals {
        composition,
        inverse,
        associativity,
        reparametrization,
    })
}
