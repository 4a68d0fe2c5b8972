use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::local::{curvature_at, default_fd_step, SignConvention};
use crate::bundle::{horizontal_lift, transport_operator, ConnectionData, SmoothPath};
use crate::diffeology::sample_lines;
use crate::error::{HolabError, Result};
use crate::holonomy::{holonomy_element, Loop};
use crate::liealg::{
    ad_stability_check, adjoint, bracket_closure, exp_mat, log_matrix, AlgebraElement, GroupElement, Mat,
    MatrixAlgebra, SubalgebraSpan, DEFAULT_RANK_TOLERANCE,
};

/// Vector field on the base chart.
pub type VectorField = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// Bundle curvature `Ad_{g⁻¹} F_x(v, w)` at a point `(x, g)`.
#[derive(Clone, Debug)]
pub struct CurvatureSample {
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    pub w: Vec<f64>,
    pub value: AlgebraElement,
    /// Family parameter and path time when sampled along horizontal lifts.
    pub provenance: Option<(f64, f64)>,
}

/// Coordinate-pair curvature `F(e_i, e_j)`, `i < j`, at each point (fiber
/// at the identity).
pub fn curvature_grid_samples(
    conn: &ConnectionData,
    points: &[Vec<f64>],
    convention: SignConvention,
) -> Result<Vec<CurvatureSample>> {
    let d = conn.base_dim();
    let h = default_fd_step(conn);
    let mut out = Vec::new();
    for x in points {
        for i in 0..d {
            for j in i + 1..d {
                let mut v = vec![0.0; d];
                let mut w = vec![0.0; d];
                v[i] = 1.0;
                w[j] = 1.0;
                let value = curvature_at(conn, x, &v, &w, h, convention)?;
                out.push(CurvatureSample {
                    x: x.clone(),
                    v,
                    w,
                    value,
                    provenance: None,
                });
            }
        }
    }
    Ok(out)
}

/// For each family member `(τ, c_τ)` and each path time `s` (rounded to
/// the nearest lift node), the bundle curvature on `(X, Y)` at `Hc_τ(s)`,
/// the lift through `start`.
#[allow(clippy::too_many_arguments)]
pub fn sample_curvature_along_horizontal(
    conn: &ConnectionData,
    family: &[(f64, SmoothPath)],
    x_field: &VectorField,
    y_field: &VectorField,
    s_grid: &[f64],
    start: &GroupElement,
    steps: usize,
    convention: SignConvention,
) -> Result<Vec<CurvatureSample>> {
    let h = default_fd_step(conn);
    let per_member: Vec<Result<Vec<CurvatureSample>>> = family
        .par_iter()
        .map(|(tau, path)| {
            let lift = horizontal_lift(conn, path, start, steps)?;
            s_grid
                .iter()
                .map(|&s| {
                    let i = (s.clamp(0.0, 1.0) * steps as f64).round() as usize;
                    let x = lift.base_points()[i].clone();
                    let (v, w) = (x_field(&x), y_field(&x));
                    let f = curvature_at(conn, &x, &v, &w, h, convention)?;
                    let value = adjoint(&lift.fiber_at(i).inverse()?, &f)?;
                    Ok(CurvatureSample {
                        x,
                        v,
                        w,
                        value,
                        provenance: Some((*tau, lift.time(i))),
                    })
                })
                .collect()
        })
        .collect();
    let mut out = Vec::new();
    for r in per_member {
        out.extend(r?);
    }
    Ok(out)
}

/// Bracket closure of the sample values: the computed reduced holonomy
/// algebra.
pub fn reduced_algebra(samples: &[CurvatureSample], rank_tolerance: f64) -> Result<SubalgebraSpan> {
    if samples.is_empty() {
        return Err(HolabError::Input("reduced algebra needs at least one curvature sample".into()));
    }
    let values: Vec<AlgebraElement> = samples.iter().map(|s| s.value.clone()).collect();
    bracket_closure(&values, rank_tolerance)
}

/// How the reduced group sits inside the structure group.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Embedding {
    /// The span itself, included as a subalgebra.
    Inclusion,
    /// `so(k)` acting on the listed coordinates of an `so(n)`.
    Block { indices: Vec<usize> },
}

impl Embedding {
    pub fn describe(&self) -> String {
        match self {
            Embedding::Inclusion => "inclusion".into(),
            Embedding::Block { indices } => format!("so({}) block on coordinates {indices:?}", indices.len()),
        }
    }

    /// Image of the embedded algebra.
    pub fn image(&self, span: &SubalgebraSpan) -> Result<SubalgebraSpan> {
        match self {
            Embedding::Inclusion => Ok(span.clone()),
            Embedding::Block { indices } => {
                let n = match span.tag() {
                    MatrixAlgebra::So(n) => n,
                    other => {
                        return Err(HolabError::Input(format!(
                            "block embedding needs an so(n) algebra, got {}",
                            other.algebra_name()
                        )))
                    }
                };
                if indices.len() < 2 || indices.iter().any(|i| *i >= n) {
                    return Err(HolabError::Input("block indices must name at least two coordinates".into()));
                }
                let mut gens = Vec::new();
                for (a, &i) in indices.iter().enumerate() {
                    for &j in &indices[a + 1..] {
                        let mut m = Mat::zeros(n, n);
                        m[(i, j)] = -1.0;
                        m[(j, i)] = 1.0;
                        gens.push(AlgebraElement::new(m, span.tag())?);
                    }
                }
                bracket_closure(&gens, DEFAULT_RANK_TOLERANCE)
            }
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LoopResidual {
    pub loop_id: String,
    /// Distance of the principal log of the holonomy to the span.
    pub log_distance: Option<f64>,
    /// `‖h − exp(P log h)‖_F`, `P` the orthogonal projection onto the span.
    pub group_residual: Option<f64>,
    pub identity_distance: f64,
    /// Why the loop was excluded, when it was.
    pub flagged: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConnectionResiduals {
    /// Max distance of `A(x)(e_k)` to the span over chart sample points.
    pub a_values: f64,
    /// Max distance of `Ad_{g⁻¹} A(γ, γ')` along lifted loops.
    pub transported: f64,
    /// Max distance of the radial-gauge form `Ad_{ψ⁻¹} A + ψ⁻¹ dψ`.
    pub radial_gauge: f64,
}

impl ConnectionResiduals {
    pub fn max(&self) -> f64 {
        self.a_values.max(self.transported).max(self.radial_gauge)
    }
}

#[derive(Clone, Debug)]
pub struct ReductionReport {
    pub span: SubalgebraSpan,
    pub embedding: Option<Embedding>,
    pub tol: f64,
    pub steps: usize,
    pub loops: Vec<LoopResidual>,
    /// Distances of curvature samples to the span.
    pub curvature_residuals: Vec<f64>,
    pub connection: Option<ConnectionResiduals>,
    pub ad_stability: f64,
    pub flagged_fraction: f64,
    pub max_log_distance: f64,
    pub max_group_residual: f64,
    pub max_identity_distance: f64,
    pub verdict: bool,
}

/// Fraction of loops whose logarithm may fail before the verdict fails.
pub const DEFAULT_FLAGGED_LIMIT: f64 = 0.1;

fn loop_residuals(conn: &ConnectionData, span: &SubalgebraSpan, loops: &[Loop], steps: usize) -> Result<Vec<LoopResidual>> {
    let e = GroupElement::identity(conn.tag());
    loops
        .par_iter()
        .map(|lp| {
            let rec = holonomy_element(conn, lp, &e, steps)?;
            let identity_distance = rec.distance_to_identity();
            Ok(match (&rec.log, &rec.log_error) {
                (Some(log), _) => {
                    let projected = span.project(log.matrix());
                    let group_residual = exp_mat(&projected)
                        .map(|m| (m - rec.element.matrix()).norm())
                        .unwrap_or(f64::NAN);
                    LoopResidual {
                        loop_id: rec.loop_id,
                        log_distance: Some(span.distance(log.matrix())),
                        group_residual: Some(group_residual),
                        identity_distance,
                        flagged: None,
                    }
                }
                (None, err) => LoopResidual {
                    loop_id: rec.loop_id,
                    log_distance: None,
                    group_residual: None,
                    identity_distance,
                    flagged: Some(err.clone().unwrap_or_else(|| "logarithm unavailable".into())),
                },
            })
        })
        .collect::<Vec<Result<LoopResidual>>>()
        .into_iter()
        .collect()
}

fn max_of(values: impl Iterator<Item = f64>) -> f64 {
    values.fold(0.0_f64, |m, v| if v.is_nan() || m.is_nan() { f64::NAN } else { m.max(v) })
}

fn summarize(loops: &[LoopResidual]) -> (f64, f64, f64, f64) {
    let flagged = loops.iter().filter(|l| l.flagged.is_some()).count();
    let fraction = if loops.is_empty() { 0.0 } else { flagged as f64 / loops.len() as f64 };
    (
        fraction,
        max_of(loops.iter().filter_map(|l| l.log_distance)),
        max_of(loops.iter().filter_map(|l| l.group_residual)),
        max_of(loops.iter().map(|l| l.identity_distance)),
    )
}

/// Span of the bracket-generated curvature algebra, then membership of
/// every holonomy log in it and Ad-stability of the span under
/// `exp(±basis)`.
pub fn ambrose_singer_verify(
    conn: &ConnectionData,
    loops: &[Loop],
    samples: &[CurvatureSample],
    steps: usize,
    tol: f64,
    flagged_limit: f64,
) -> Result<ReductionReport> {
    let span = reduced_algebra(samples, DEFAULT_RANK_TOLERANCE)?;
    let ad = ad_stability_check(&span, &span.exp_probes(1.0)?)?;
    let residuals = loop_residuals(conn, &span, loops, steps)?;
    let curvature_residuals: Vec<f64> = samples.iter().map(|s| span.distance(s.value.matrix())).collect();
    let (flagged_fraction, max_log, max_group, max_id) = summarize(&residuals);
    let verdict = max_log <= tol
        && ad.max_residual <= tol
        && flagged_fraction < flagged_limit.max(f64::MIN_POSITIVE)
        && max_of(curvature_residuals.iter().copied()) <= tol;
    Ok(ReductionReport {
        span,
        embedding: None,
        tol,
        steps,
        loops: residuals,
        curvature_residuals,
        connection: None,
        ad_stability: ad.max_residual,
        flagged_fraction,
        max_log_distance: max_log,
        max_group_residual: max_group,
        max_identity_distance: max_id,
        verdict,
    })
}

/// Checks that holonomy and the connection reduce to `span`:
/// (a) holonomy logs lie in the span and each holonomy lies in
/// `exp(span)`; (b) the connection form, its transport along lifted
/// loops and its radial-gauge transform take values in the span.
#[allow(clippy::too_many_arguments)]
pub fn reduction_check(
    conn: &ConnectionData,
    span: &SubalgebraSpan,
    embedding: &Embedding,
    loops: &[Loop],
    center: &[f64],
    steps: usize,
    tol: f64,
) -> Result<ReductionReport> {
    if span.tag() != conn.tag() {
        return Err(HolabError::Shape("span and connection live in different algebras".into()));
    }
    let ad = ad_stability_check(span, &span.exp_probes(1.0)?)?;
    if !(ad.max_residual <= tol) {
        return Err(HolabError::Precondition(format!(
            "span is not Ad-stable under its exponentials (residual {:.3e})",
            ad.max_residual
        )));
    }
    let image = embedding.image(span)?;
    let embedding_gap = span
        .basis()
        .iter()
        .map(|b| image.distance(b.matrix()))
        .chain(image.basis().iter().map(|b| span.distance(b.matrix())))
        .fold(0.0, f64::max);
    if embedding_gap > tol {
        return Err(HolabError::Input(format!(
            "embedding '{}' does not match the span (gap {embedding_gap:.3e})",
            embedding.describe()
        )));
    }
    let residuals = loop_residuals(conn, span, loops, steps)?;
    let connection = connection_residuals(conn, span, loops, center, steps)?;
    let (flagged_fraction, max_log, max_group, max_id) = summarize(&residuals);
    let verdict = max_log <= tol && max_group <= tol && connection.max() <= tol && flagged_fraction == 0.0;
    Ok(ReductionReport {
        span: span.clone(),
        embedding: Some(embedding.clone()),
        tol,
        steps,
        loops: residuals,
        curvature_residuals: Vec::new(),
        connection: Some(connection),
        ad_stability: ad.max_residual,
        flagged_fraction,
        max_log_distance: max_log,
        max_group_residual: max_group,
        max_identity_distance: max_id,
        verdict,
    })
}

const CONNECTION_SAMPLE_POINTS: usize = 9;
const TRANSPORT_STRIDE: usize = 25;

fn connection_residuals(
    conn: &ConnectionData,
    span: &SubalgebraSpan,
    loops: &[Loop],
    center: &[f64],
    steps: usize,
) -> Result<ConnectionResiduals> {
    let d = conn.base_dim();
    let points: Vec<Vec<f64>> = sample_lines(conn.chart().domain(), CONNECTION_SAMPLE_POINTS)
        .into_iter()
        .flat_map(|l| l.points)
        .filter(|p| conn.chart().domain().margin(p) > 1e-3 * conn.chart().domain().scale())
        .collect();
    let basis_vec = |k: usize| {
        let mut e = vec![0.0; d];
        e[k] = 1.0;
        e
    };
    let mut a_values = 0.0_f64;
    for x in &points {
        for k in 0..d {
            a_values = a_values.max(span.distance(&conn.a_matrix(x, &basis_vec(k))?));
        }
    }

    let e = GroupElement::identity(conn.tag());
    let transported = loops
        .par_iter()
        .map(|lp| -> Result<f64> {
            let lift = horizontal_lift(conn, lp.path(), &e, steps)?;
            let mut worst = 0.0_f64;
            for i in (0..=steps).step_by(TRANSPORT_STRIDE) {
                let x = &lift.base_points()[i];
                let a = conn.a_eval(x, &lp.path().velocity(lift.time(i)))?;
                let moved = adjoint(&lift.fiber_at(i).inverse()?, &a)?;
                worst = worst.max(span.distance(moved.matrix()));
            }
            Ok(worst)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .try_fold(0.0_f64, |m, r| r.map(|v| m.max(v)))?;

    let ray_to = |u: &[f64]| -> Result<GroupElement> {
        let (m, dir): (Vec<f64>, Vec<f64>) = (center.to_vec(), u.iter().zip(center).map(|(a, b)| a - b).collect());
        let d2 = dir.clone();
        let ray = SmoothPath::from_fn("ray", d, move |t| m.iter().zip(&dir).map(|(a, b)| a + t * b).collect())
            .with_derivative(Arc::new(move |_| d2.clone()));
        Ok(transport_operator(conn, &ray, steps)?.last())
    };
    let h = default_fd_step(conn);
    let mut radial_gauge = 0.0_f64;
    for x in points.iter().step_by(3) {
        let psi = ray_to(x)?;
        let psi_inv = psi.inverse()?;
        for k in 0..d {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[k] += h;
            xm[k] -= h;
            let lp = log_matrix(&(&psi_inv * &ray_to(&xp)?))?;
            let lm = log_matrix(&(&psi_inv * &ray_to(&xm)?))?;
            let dpsi = (lp.matrix() - lm.matrix()) / (2.0 * h);
            let a = adjoint(&psi_inv, &conn.a_eval(x, &basis_vec(k))?)?;
            radial_gauge = radial_gauge.max(span.distance(&(a.into_matrix() + dpsi)));
        }
    }
    Ok(ConnectionResiduals {
        a_values,
        transported,
        radial_gauge,
    })
}
