use serde::Serialize;

use super::loops::Loop;
use super::record::holonomy_family;
use crate::bundle::{ConnectionData, JOIN_TOL};
use crate::error::{HolabError, Result};

/// Verdicts are relative to the tested families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Flatness {
    NotFlat,
    Flat,
    TotallyFlat,
}

#[derive(Clone, Debug, Serialize)]
pub struct FamilyFlatness {
    pub loops: usize,
    /// `max_k ‖h_k − h_0‖_F` along the deformation.
    pub variation: f64,
    pub max_identity_distance: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct FlatnessReport {
    pub verdict: Flatness,
    pub tol: f64,
    pub families: Vec<FamilyFlatness>,
    pub max_variation: f64,
    pub max_identity_distance: f64,
}

/// Each family is a sampled smooth deformation of loops based at
/// `basepoint`. Flat when the holonomy is constant along every family,
/// totally flat when additionally every holonomy is the identity.
pub fn flatness_check(
    conn: &ConnectionData,
    basepoint: &[f64],
    families: &[Vec<Loop>],
    steps: usize,
    tol: f64,
) -> Result<FlatnessReport> {
    if families.iter().all(Vec::is_empty) {
        return Err(HolabError::Input("flatness check needs at least one loop".into()));
    }
    for l in families.iter().flatten() {
        let b = l.basepoint();
        let gap = b.iter().zip(basepoint).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        if b.len() != basepoint.len() || gap > JOIN_TOL {
            return Err(HolabError::Input(format!("loop '{}' is not based at {basepoint:?}", l.id())));
        }
    }
    let mut out = Vec::with_capacity(families.len());
    for family in families {
        let records = holonomy_family(conn, family, steps)?;
        let variation = records
            .iter()
            .map(|r| r.element.distance(&records[0].element))
            .fold(0.0, f64::max);
        let max_identity_distance = records.iter().map(|r| r.distance_to_identity()).fold(0.0, f64::max);
        out.push(FamilyFlatness {
            loops: family.len(),
            variation,
            max_identity_distance,
        });
    }
    let max_variation = out.iter().map(|f| f.variation).fold(0.0, f64::max);
    let max_identity_distance = out.iter().map(|f| f.max_identity_distance).fold(0.0, f64::max);
    let verdict = if !(max_variation <= tol) {
        Flatness::NotFlat
    } else if max_identity_distance <= tol {
        Flatness::TotallyFlat
    } else {
        Flatness::Flat
    };
    Ok(FlatnessReport {
        verdict,
        tol,
        families: out,
        max_variation,
        max_identity_distance,
    })
}
