//! Evolution of the radial gauge along a path.
//!
//! With `ψ(u)` the transport through `e` along the ray `t ↦ m + t(u − m)`
//! and `g_t` the transport up to time `t` on that ray,
//!
//! ```text
//! Ad_{ψ⁻¹} A(c, c') + ψ⁻¹ ∂_s ψ  =  ∫₀¹ Ad_{g_t⁻¹} F(c − m, t c') dt,    ψ = ψ(c(s))
//! ```
//!
//! The left side uses a central difference in `s` with step `1/steps`, the
//! right side the trapezoid rule on the `steps + 1` ray nodes, so the
//! residual falls at second order.

use serde::Serialize;

use super::local::{curvature_at, default_fd_step, SignConvention};
use crate::bundle::{transport_operator, ConnectionData, SmoothPath};
use crate::error::{HolabError, Result};
use crate::liealg::{adjoint, AlgebraElement, GroupPath, Mat};

/// Path parameters at which both sides are compared.
pub const PLAQUES_S: [f64; 5] = [0.1, 0.3, 0.5, 0.7, 0.9];

#[derive(Clone, Debug, Serialize)]
pub struct PlaquesResult {
    pub steps: usize,
    pub s_values: Vec<f64>,
    /// Max-abs entry of `lhs − rhs` at each `s`.
    pub per_s: Vec<f64>,
    pub residual: f64,
    /// Max-abs entry of the right side, for scale.
    pub rhs_scale: f64,
}

fn ray(center: &[f64], u: &[f64]) -> SmoothPath {
    let (m, dir): (Vec<f64>, Vec<f64>) = (center.to_vec(), u.iter().zip(center).map(|(a, b)| a - b).collect());
    let d2 = dir.clone();
    SmoothPath::from_fn("ray", center.len(), move |t| m.iter().zip(&dir).map(|(a, b)| a + t * b).collect())
        .with_derivative(std::sync::Arc::new(move |_| d2.clone()))
}

fn radial(conn: &ConnectionData, center: &[f64], u: &[f64], steps: usize) -> Result<GroupPath> {
    transport_operator(conn, &ray(center, u), steps)
}

/// Both sides of the radial-gauge evolution identity at parameter `s`.
pub fn plaques_sides(
    conn: &ConnectionData,
    center: &[f64],
    c: &SmoothPath,
    s: f64,
    steps: usize,
    convention: SignConvention,
) -> Result<(AlgebraElement, AlgebraElement)> {
    let tag = conn.tag();
    let ds = 1.0 / steps as f64;
    if !(ds < s && s + ds < 1.0) {
        return Err(HolabError::Input(format!("parameter {s} too close to the ends for step {ds}")));
    }
    let x = c.position(s);
    let xv = c.velocity(s);
    let plus = radial(conn, center, &c.position(s + ds), steps)?.last();
    let minus = radial(conn, center, &c.position(s - ds), steps)?.last();
    let rays = radial(conn, center, &x, steps)?;
    let g = rays.last();
    let ginv = g.inverse()?;
    let dg: Mat = (plus.matrix() - minus.matrix()) / (2.0 * ds);
    let lhs = adjoint(&ginv, &conn.a_eval(&x, &xv)?)?.into_matrix() + ginv.matrix() * dg;

    let radial_dir: Vec<f64> = x.iter().zip(center).map(|(a, b)| a - b).collect();
    let h = default_fd_step(conn);
    let n = tag.size();
    let mut rhs = Mat::zeros(n, n);
    for i in 0..=steps {
        let t = rays.time(i);
        let p: Vec<f64> = center.iter().zip(&radial_dir).map(|(m, r)| m + t * r).collect();
        let tv: Vec<f64> = xv.iter().map(|v| t * v).collect();
        let f = curvature_at(conn, &p, &radial_dir, &tv, h, convention)?;
        let moved = adjoint(&rays.at(i).inverse()?, &f)?;
        let w = if i == 0 || i == steps { 0.5 } else { 1.0 };
        rhs += moved.matrix() * (w / steps as f64);
    }
    Ok((AlgebraElement::raw(lhs, tag), AlgebraElement::raw(rhs, tag)))
}

/// Max-abs difference of the two sides over [`PLAQUES_S`].
pub fn plaques_identity_residual(
    conn: &ConnectionData,
    center: &[f64],
    c: &SmoothPath,
    steps: usize,
    convention: SignConvention,
) -> Result<PlaquesResult> {
    if center.len() != conn.base_dim() || c.dim() != conn.base_dim() {
        return Err(HolabError::Shape("center and path must live in the base chart".into()));
    }
    conn.chart().check(center)?;
    let mut per_s = Vec::with_capacity(PLAQUES_S.len());
    let mut rhs_scale = 0.0_f64;
    for &s in &PLAQUES_S {
        let (lhs, rhs) = plaques_sides(conn, center, c, s, steps, convention)?;
        per_s.push((lhs.matrix() - rhs.matrix()).amax());
        rhs_scale = rhs_scale.max(rhs.matrix().amax());
    }
    Ok(PlaquesResult {
        steps,
        s_values: PLAQUES_S.to_vec(),
        residual: per_s.iter().copied().fold(0.0, f64::max),
        per_s,
        rhs_scale,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct PlaquesConvergence {
    pub runs: Vec<PlaquesResult>,
    /// `log₂(r(N/2) / r(N))` between consecutive runs.
    pub orders: Vec<f64>,
}

/// Runs the identity at `steps`, `steps/2`, … (coarsest first).
pub fn plaques_convergence(
    conn: &ConnectionData,
    center: &[f64],
    c: &SmoothPath,
    step_counts: &[usize],
    convention: SignConvention,
) -> Result<PlaquesConvergence> {
    let runs: Vec<PlaquesResult> = step_counts
        .iter()
        .map(|&n| plaques_identity_residual(conn, center, c, n, convention))
        .collect::<Result<_>>()?;
    let orders = runs
        .windows(2)
        .map(|w| (w[0].residual / w[1].residual).log2() / (w[1].steps as f64 / w[0].steps as f64).log2())
        .collect();
    Ok(PlaquesConvergence { runs, orders })
}
