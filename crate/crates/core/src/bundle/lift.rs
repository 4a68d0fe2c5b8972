use super::connection::ConnectionData;
use super::path::SmoothPath;
use crate::error::{HolabError, Result};
use crate::liealg::{product_integral_fn, GroupElement, GroupPath, Mat, MatrixAlgebra, MEMBERSHIP_TOL};

pub const DEFAULT_STEPS: usize = 1000;
pub const MIN_LIFT_STEPS: usize = 8;

/// Horizontal lift `t ↦ (γ(t), g(t))` sampled at `steps + 1` uniform nodes,
/// with `g = E·g₀` where `E' = −A(γ, γ') E`, `E(0) = e`.
#[derive(Clone, Debug)]
pub struct LiftedPath {
    label: String,
    base: Vec<Vec<f64>>,
    transport: GroupPath,
    start: GroupElement,
}

impl LiftedPath {
    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn steps(&self) -> usize {
        self.transport.steps()
    }

    pub fn time(&self, i: usize) -> f64 {
        self.transport.time(i)
    }

    pub fn tag(&self) -> MatrixAlgebra {
        self.start.tag()
    }

    pub fn base_points(&self) -> &[Vec<f64>] {
        &self.base
    }

    pub fn start(&self) -> &GroupElement {
        &self.start
    }

    /// Transport operator `E(t)` at every node.
    pub fn transport(&self) -> &GroupPath {
        &self.transport
    }

    pub fn fiber_at(&self, i: usize) -> GroupElement {
        &self.transport.at(i) * &self.start
    }

    pub fn fiber(&self) -> Vec<GroupElement> {
        (0..=self.steps()).map(|i| self.fiber_at(i)).collect()
    }

    pub fn end(&self) -> GroupElement {
        self.fiber_at(self.steps())
    }

    pub fn max_relation_residual(&self) -> f64 {
        self.fiber().iter().map(GroupElement::relation_residual).fold(0.0, f64::max)
    }

    /// Max node distance between the projected lift and `γ`.
    pub fn projection_residual(&self, path: &SmoothPath) -> f64 {
        self.base
            .iter()
            .enumerate()
            .map(|(i, x)| {
                x.iter()
                    .zip(path.position(self.time(i)))
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }

    /// Max over interior nodes of `‖θ(γ', ġ)‖_F`, with `ġ` from a
    /// fourth-order difference of the fiber samples.
    pub fn horizontality_residual(&self, conn: &ConnectionData, path: &SmoothPath) -> Result<f64> {
        let n = self.steps();
        if n < 4 {
            return Err(HolabError::Input("horizontality needs at least four steps".into()));
        }
        let h = 1.0 / n as f64;
        let fiber = self.fiber();
        let mut worst = 0.0_f64;
        for i in 2..=n - 2 {
            let gdot: Mat = (fiber[i - 2].matrix() - fiber[i - 1].matrix() * 8.0 + fiber[i + 1].matrix() * 8.0
                - fiber[i + 2].matrix())
                / (12.0 * h);
            let t = self.time(i);
            let theta = super::theta_eval(conn, &self.base[i], &fiber[i], &path.velocity(t), &gdot)?;
            worst = worst.max(theta.norm());
        }
        Ok(worst)
    }
}

fn validate(conn: &ConnectionData, path: &SmoothPath, steps: usize) -> Result<()> {
    if path.dim() != conn.base_dim() {
        return Err(HolabError::Shape(format!(
            "path '{}' has dimension {} but the base has dimension {}",
            path.label(),
            path.dim(),
            conn.base_dim()
        )));
    }
    if steps < MIN_LIFT_STEPS {
        return Err(HolabError::Input(format!("lift needs at least {MIN_LIFT_STEPS} steps, got {steps}")));
    }
    Ok(())
}

/// `E(t)` with `E' = −A(γ, γ') E`, `E(0) = e`.
pub fn transport_operator(conn: &ConnectionData, path: &SmoothPath, steps: usize) -> Result<GroupPath> {
    validate(conn, path, steps)?;
    let fd = 1.0 / (8.0 * steps as f64);
    product_integral_fn(conn.tag(), steps, |t| {
        let x = path.position(t);
        let v = path.velocity_with_step(t, fd);
        conn.a_matrix(&x, &v)
            .map(|a| -a)
            .map_err(|e| e.context(format!("path '{}' at t = {t}", path.label())))
    })
}

pub fn horizontal_lift(conn: &ConnectionData, path: &SmoothPath, start: &GroupElement, steps: usize) -> Result<LiftedPath> {
    if start.tag() != conn.tag() {
        return Err(HolabError::Shape(format!(
            "start point in {} for a connection on {}",
            start.tag().group_name(),
            conn.tag().group_name()
        )));
    }
    if start.relation_residual() > MEMBERSHIP_TOL {
        return Err(HolabError::Input("start point is not a group element".into()));
    }
    let transport = transport_operator(conn, path, steps)?;
    let base = (0..=steps).map(|i| path.position(transport.time(i))).collect();
    Ok(LiftedPath {
        label: path.label().to_string(),
        base,
        transport,
        start: start.clone(),
    })
}

/// Fiber coordinate at time `t` of the lift of `γ|[0,t]` through `start`.
pub fn parallel_transport(
    conn: &ConnectionData,
    path: &SmoothPath,
    t: f64,
    start: &GroupElement,
    steps: usize,
) -> Result<GroupElement> {
    if !(0.0..=1.0).contains(&t) {
        return Err(HolabError::Input(format!("transport time {t} outside [0, 1]")));
    }
    if t == 0.0 {
        validate(conn, path, steps)?;
        return Ok(start.clone());
    }
    Ok(horizontal_lift(conn, &path.truncate(t), start, steps)?.end())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundle::{BaseChart, FormTerm};
    use crate::diffeology::OpenBox;
    use crate::liealg::{exp_mat, MatrixAlgebra};

    fn magnetic() -> ConnectionData {
        let chart = BaseChart::new("plane", OpenBox::cube(2, -2.0, 2.0).unwrap()).unwrap();
        let terms = [FormTerm { coeff: "x".into(), dx: 1, basis: 0 }];
        ConnectionData::from_terms("magnetic", chart, MatrixAlgebra::So(2).standard_basis(), &["x", "y"], &terms).unwrap()
    }

    #[test]
    fn circle_holonomy_is_the_exponential_of_minus_the_flux() {
        let conn = magnetic();
        let r = 0.8;
        let circle = SmoothPath::from_fn("circle", 2, move |t| {
            let a = std::f64::consts::TAU * t;
            vec![r * a.cos(), r * a.sin()]
        });
        let g0 = GroupElement::identity(MatrixAlgebra::So(2));
        let lift = horizontal_lift(&conn, &circle, &g0, 800).unwrap();
        let j = conn.basis().elements()[0].matrix().clone();
        let expected = exp_mat(&(j * (-std::f64::consts::PI * r * r))).unwrap();
        assert!((lift.end().matrix() - expected).amax() < 1e-10);
        let hr = lift.horizontality_residual(&conn, &circle).unwrap();
        assert!(hr < 1e-7, "{hr}");
        assert_eq!(lift.projection_residual(&circle), 0.0);
    }

    #[test]
    fn leaving_the_chart_is_a_domain_error() {
        let conn = magnetic();
        let out = SmoothPath::segment(vec![0.0, 0.0], vec![3.0, 0.0]).unwrap();
        let g0 = GroupElement::identity(MatrixAlgebra::So(2));
        assert!(matches!(
            horizontal_lift(&conn, &out, &g0, 64).unwrap_err(),
            HolabError::Context { .. } | HolabError::Domain(_)
        ));
        assert!(matches!(horizontal_lift(&conn, &out, &g0, 4), Err(HolabError::Input(_))));
    }
}
