//! Scenario registry: built-in geometries and user JSON files.
//!
//! A scenario file (`"schema_version": 1`) declares a chart, a structure
//! group, a connection as a list of terms `coeff(x) dx_i ⊗ e_j`, named loop
//! families given by path expressions in `t` and parameters, homotopies
//! given by expressions in `t` and `s`, and declared properties. Loops on a
//! periodic chart carry a `winding` vector and close up to the period
//! lattice. Validation errors name the offending field as a JSON path.

mod generate;
mod loader;

use std::path::Path;
use std::sync::Arc;

use serde_json::Value;

use crate::bundle::{BaseChart, ConnectionData};
use crate::curvature::Embedding;
use crate::error::{HolabError, Result};
use crate::expr::Expr;
use crate::holonomy::{Flatness, Loop};

pub use generate::{
    axiom_cases, convergence_path, holonomy_bundle_samples, probe_points, random_arc, random_loops, BUNDLE_SAMPLE_TIMES, FIBER_STARTS_PER_CASE,
    FOURIER_HARMONICS,
};
pub use loader::{scenario_from_value, SCHEMA_VERSION};

const BUILTINS: [(&str, &str); 6] = [
    ("flat-plane", include_str!("builtin/flat-plane.json")),
    ("flat-torus", include_str!("builtin/flat-torus.json")),
    ("magnetic-u1", include_str!("builtin/magnetic-u1.json")),
    ("sphere-lc", include_str!("builtin/sphere-lc.json")),
    ("so3-generic", include_str!("builtin/so3-generic.json")),
    ("so3-reducible", include_str!("builtin/so3-reducible.json")),
];

/// Names of the built-in scenarios.
pub fn builtin_names() -> Vec<&'static str> {
    BUILTINS.iter().map(|(n, _)| *n).collect()
}

/// Source JSON of a built-in scenario.
pub fn builtin_source(name: &str) -> Option<&'static str> {
    BUILTINS.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

#[derive(Clone, Debug, Default)]
pub struct Properties {
    pub flat: bool,
    pub abelian: bool,
    /// Asserted, not computed.
    pub simply_connected: bool,
    pub reducible_to: Option<Embedding>,
}

#[derive(Clone, Debug)]
pub struct LoopFamily {
    pub name: String,
    pub param_names: Vec<String>,
    /// Parameter values of each loop, in loop order.
    pub params: Vec<Vec<f64>>,
    pub loops: Vec<Loop>,
}

/// A sampled smooth deformation of loops with a common basepoint.
#[derive(Clone, Debug)]
pub struct Homotopy {
    pub name: String,
    pub winding: Vec<i64>,
    pub loops: Vec<Loop>,
}

/// Machine-checked entries of `expected`.
#[derive(Clone, Debug)]
pub enum Expectation {
    /// `{"quantity": "holonomy_angle", "family": f, "angle": expr}`: the
    /// holonomy of each loop of `f` is `exp(angle · b)` for the single basis
    /// element `b`, with `angle` an expression in the family parameters.
    HolonomyAngle { family: String, angle: Arc<Expr> },
    /// `{"quantity": "reduced_algebra_rank", "value": n}`.
    ReducedRank(usize),
    /// `{"quantity": "flatness", "value": "not_flat" | "flat" | "totally_flat"}`
    /// over the declared homotopies.
    Flatness(Flatness),
}

#[derive(Clone, Debug)]
pub struct Scenario {
    pub name: String,
    pub description: String,
    pub vars: Vec<String>,
    pub chart: BaseChart,
    pub connection: ConnectionData,
    pub basepoint: Vec<f64>,
    /// Center of the radial gauge; the chart is star-shaped about it.
    pub center: Vec<f64>,
    /// Size of generated random loops around the basepoint.
    pub loop_radius: f64,
    pub properties: Properties,
    pub loop_families: Vec<LoopFamily>,
    pub homotopies: Vec<Homotopy>,
    /// Expected values, carried into reports; see [`Expectation`].
    pub expected: Vec<Value>,
    pub expectations: Vec<Expectation>,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: Value = serde_json::from_str(text).map_err(|e| HolabError::validation("$", e.to_string()))?;
        scenario_from_value(&doc)
    }

    pub fn builtin(name: &str) -> Result<Self> {
        let src = builtin_source(name).ok_or_else(|| {
            HolabError::Input(format!("unknown scenario '{name}' (built-ins: {})", builtin_names().join(", ")))
        })?;
        Self::from_json(src).map_err(|e| e.context(format!("built-in scenario '{name}'")))
    }

    pub fn family(&self, name: &str) -> Option<&LoopFamily> {
        self.loop_families.iter().find(|f| f.name == name)
    }

    pub fn family_loops(&self) -> Vec<Loop> {
        self.loop_families.iter().flat_map(|f| f.loops.iter().cloned()).collect()
    }
}

/// A built-in name, or a path to a scenario JSON file.
pub fn load_scenario(name_or_path: &str) -> Result<Scenario> {
    if builtin_source(name_or_path).is_some() {
        return Scenario::builtin(name_or_path);
    }
    let p = Path::new(name_or_path);
    if !p.exists() {
        return Err(HolabError::Input(format!(
            "'{name_or_path}' is neither a built-in scenario ({}) nor a file",
            builtin_names().join(", ")
        )));
    }
    let text = std::fs::read_to_string(p).map_err(|e| HolabError::from(e).context(format!("reading {name_or_path}")))?;
    Scenario::from_json(&text).map_err(|e| e.context(format!("scenario file {name_or_path}")))
}
