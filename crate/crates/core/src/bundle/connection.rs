use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::chart::BaseChart;
use crate::error::{HolabError, Result};
use crate::expr::{parse, Expr};
use crate::liealg::{adjoint, AlgebraBasis, AlgebraElement, GroupElement, Mat, MatrixAlgebra};

/// `x ↦ (A₁(x), …, A_d(x))`.
pub type ComponentsFn = Arc<dyn Fn(&[f64]) -> Vec<Mat> + Send + Sync>;
/// `x ↦ [k][i] = ∂_k A_i(x)`.
pub type PartialsFn = Arc<dyn Fn(&[f64]) -> Vec<Vec<Mat>> + Send + Sync>;

/// One term `c(x) dx_i ⊗ e_j` of a symbolic local form.
#[derive(Clone, Debug)]
pub struct FormTerm {
    pub coeff: String,
    pub dx: usize,
    pub basis: usize,
}

#[derive(Clone)]
enum LocalForm {
    Symbolic {
        /// `coeffs[i][j]`: coefficient of `dx_i ⊗ e_j`.
        coeffs: Vec<Vec<Expr>>,
        /// `partials[k][i][j] = ∂_k coeffs[i][j]`.
        partials: Vec<Vec<Vec<Expr>>>,
    },
    Closure {
        a: ComponentsFn,
        da: Option<PartialsFn>,
    },
}

/// Local connection form `A = Σᵢ Aᵢ(x) dxᵢ` on a chart, with values in a
/// matrix Lie algebra. On the trivialized bundle `U × G` it induces
/// `θ_(x,g)(v, ġ) = Ad_{g⁻¹} A(x)(v) + g⁻¹ġ`.
#[derive(Clone)]
pub struct ConnectionData {
    label: String,
    chart: BaseChart,
    basis: AlgebraBasis,
    form: LocalForm,
}

impl fmt::Debug for ConnectionData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ConnectionData")
            .field("label", &self.label)
            .field("chart", &self.chart.name())
            .field("algebra", &self.basis.name())
            .field("exact_dA", &self.has_exact_da())
            .finish()
    }
}

impl ConnectionData {
    /// Builds `A` from terms whose coefficients are expressions in `vars`
    /// (one name per chart axis); `dA` is obtained symbolically.
    pub fn from_terms(
        label: impl Into<String>,
        chart: BaseChart,
        basis: AlgebraBasis,
        vars: &[&str],
        terms: &[FormTerm],
    ) -> Result<Self> {
        let d = chart.dim();
        if vars.len() != d {
            return Err(HolabError::Shape(format!("{} variable names for a {d}-dimensional chart", vars.len())));
        }
        let n = basis.dim();
        let mut coeffs = vec![vec![Expr::Const(0.0); n]; d];
        for (t, term) in terms.iter().enumerate() {
            if term.dx >= d || term.basis >= n {
                return Err(HolabError::Input(format!(
                    "term {t} refers to dx_{} ⊗ e_{} outside the chart or basis",
                    term.dx, term.basis
                )));
            }
            let e = parse(&term.coeff, vars)?;
            let slot = &mut coeffs[term.dx][term.basis];
            *slot = if slot.is_zero() {
                e
            } else {
                Expr::Add(Box::new(slot.clone()), Box::new(e))
            };
        }
        let partials = (0..d)
            .map(|k| coeffs.iter().map(|row| row.iter().map(|c| c.derivative(k)).collect()).collect())
            .collect();
        Ok(Self {
            label: label.into(),
            chart,
            basis,
            form: LocalForm::Symbolic { coeffs, partials },
        })
    }

    /// Builds `A` from an evaluator of its component matrices.
    pub fn from_fn(label: impl Into<String>, chart: BaseChart, basis: AlgebraBasis, a: ComponentsFn) -> Self {
        Self {
            label: label.into(),
            chart,
            basis,
            form: LocalForm::Closure { a, da: None },
        }
    }

    /// Supplies `∂_k A_i` for closure-based forms.
    pub fn with_partials(mut self, partials: PartialsFn) -> Result<Self> {
        match &mut self.form {
            LocalForm::Closure { da, .. } => {
                *da = Some(partials);
                Ok(self)
            }
            LocalForm::Symbolic { .. } => Err(HolabError::Input("symbolic forms carry their own derivative".into())),
        }
    }

    /// `A ≡ 0`.
    pub fn zero(label: impl Into<String>, chart: BaseChart, basis: AlgebraBasis) -> Self {
        let d = chart.dim();
        let n = basis.dim();
        Self {
            label: label.into(),
            chart,
            basis,
            form: LocalForm::Symbolic {
                coeffs: vec![vec![Expr::Const(0.0); n]; d],
                partials: vec![vec![vec![Expr::Const(0.0); n]; d]; d],
            },
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn chart(&self) -> &BaseChart {
        &self.chart
    }

    pub fn basis(&self) -> &AlgebraBasis {
        &self.basis
    }

    pub fn tag(&self) -> MatrixAlgebra {
        self.basis.tag()
    }

    pub fn base_dim(&self) -> usize {
        self.chart.dim()
    }

    pub fn has_exact_da(&self) -> bool {
        match &self.form {
            LocalForm::Symbolic { .. } => true,
            LocalForm::Closure { da, .. } => da.is_some(),
        }
    }

    /// True when every coefficient is the literal zero.
    pub fn is_identically_zero(&self) -> bool {
        match &self.form {
            LocalForm::Symbolic { coeffs, .. } => coeffs.iter().flatten().all(Expr::is_zero),
            LocalForm::Closure { .. } => false,
        }
    }

    fn combine(&self, coeffs: &[f64]) -> Mat {
        let n = self.tag().size();
        let mut m = Mat::zeros(n, n);
        for (c, e) in coeffs.iter().zip(self.basis.elements()) {
            if *c != 0.0 {
                m += e.matrix() * *c;
            }
        }
        m
    }

    /// Component matrices `Aᵢ(x)`.
    pub fn components(&self, x: &[f64]) -> Result<Vec<Mat>> {
        self.chart.check(x)?;
        Ok(match &self.form {
            LocalForm::Symbolic { coeffs, .. } => coeffs
                .iter()
                .map(|row| {
                    let c: Vec<f64> = row.iter().map(|e| e.eval(x)).collect();
                    self.combine(&c)
                })
                .collect(),
            LocalForm::Closure { a, .. } => a(x),
        })
    }

    /// `A(x)(v)` as a raw matrix.
    pub fn a_matrix(&self, x: &[f64], v: &[f64]) -> Result<Mat> {
        if v.len() != self.base_dim() {
            return Err(HolabError::Shape("tangent vector dimension".into()));
        }
        let n = self.tag().size();
        let mut m = Mat::zeros(n, n);
        for (ai, vi) in self.components(x)?.iter().zip(v) {
            if *vi != 0.0 {
                m += ai * *vi;
            }
        }
        if !crate::liealg::max_abs(&m).is_finite() {
            return Err(HolabError::Numeric(format!("connection form is not finite at {x:?}")));
        }
        Ok(m)
    }

    pub fn a_eval(&self, x: &[f64], v: &[f64]) -> Result<AlgebraElement> {
        AlgebraElement::new(self.a_matrix(x, v)?, self.tag())
    }

    /// `∂_k Aᵢ(x)` when available exactly.
    pub fn partials(&self, x: &[f64]) -> Option<Result<Vec<Vec<Mat>>>> {
        if let Err(e) = self.chart.check(x) {
            return Some(Err(e));
        }
        match &self.form {
            LocalForm::Symbolic { partials, .. } => Some(Ok(partials
                .iter()
                .map(|pk| {
                    pk.iter()
                        .map(|row| {
                            let c: Vec<f64> = row.iter().map(|e| e.eval(x)).collect();
                            self.combine(&c)
                        })
                        .collect()
                })
                .collect())),
            LocalForm::Closure { da, .. } => da.as_ref().map(|f| Ok(f(x))),
        }
    }

    /// `dA(x)(v, w) = Σ_{k,i} ∂_k Aᵢ (v_k wᵢ − w_k vᵢ)` when available exactly.
    pub fn exact_da(&self, x: &[f64], v: &[f64], w: &[f64]) -> Option<Result<AlgebraElement>> {
        let partials = match self.partials(x)? {
            Ok(p) => p,
            Err(e) => return Some(Err(e)),
        };
        let n = self.tag().size();
        let mut m = Mat::zeros(n, n);
        for (k, pk) in partials.iter().enumerate() {
            for (i, dka) in pk.iter().enumerate() {
                let c = v[k] * w[i] - w[k] * v[i];
                if c != 0.0 {
                    m += dka * c;
                }
            }
        }
        Some(Ok(AlgebraElement::raw(m, self.tag())))
    }

    /// Max deviation of `A(x)(av + bw)` from `aA(x)(v) + bA(x)(w)` over
    /// random draws in the chart.
    pub fn linearity_residual(&self, trials: usize, seed: u64) -> Result<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = self.base_dim();
        let mut worst = 0.0_f64;
        for _ in 0..trials {
            let x: Vec<f64> = (0..d)
                .map(|k| {
                    let (a, b) = self.chart.domain().sample_interval(k);
                    let inset = 0.05 * (b - a);
                    rng.random_range(a + inset..b - inset)
                })
                .collect();
            let v: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
            let w: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
            let (a, b) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
            let comb: Vec<f64> = v.iter().zip(&w).map(|(p, q)| a * p + b * q).collect();
            let lhs = self.a_matrix(&x, &comb)?;
            let rhs = self.a_matrix(&x, &v)? * a + self.a_matrix(&x, &w)? * b;
            worst = worst.max((lhs - rhs).amax());
            if let Some(da) = self.exact_da(&x, &v, &w) {
                let vw = da?;
                let wv = self.exact_da(&x, &w, &v).expect("present")?;
                worst = worst.max((vw.matrix() + wv.matrix()).amax());
            }
        }
        Ok(worst)
    }
}

/// `θ_(x,g)(v, ġ) = Ad_{g⁻¹} A(x)(v) + g⁻¹ ġ`.
pub fn theta_eval(conn: &ConnectionData, x: &[f64], g: &GroupElement, v: &[f64], gdot: &Mat) -> Result<AlgebraElement> {
    if g.tag() != conn.tag() {
        return Err(HolabError::Shape("fiber element from a different group".into()));
    }
    let a = conn.a_eval(x, v)?;
    let ginv = g.inverse()?;
    let horizontal = adjoint(&ginv, &a)?;
    let vertical = ginv.matrix() * gdot;
    Ok(AlgebraElement::raw(horizontal.into_matrix() + vertical, conn.tag()))
}

/// Fiber velocity `g ξ` of the fundamental field of `ξ` at `g`.
pub fn vertical_tangent(g: &GroupElement, xi: &AlgebraElement) -> Mat {
    g.matrix() * xi.matrix()
}

/// One test of the right-invariance law at `(x, g)` with tangent `(v, ġ)`
/// and right translation by `h`.
#[derive(Clone, Debug)]
pub struct InvarianceProbe {
    pub x: Vec<f64>,
    pub g: GroupElement,
    pub h: GroupElement,
    pub v: Vec<f64>,
    pub gdot: Mat,
}

/// Max over probes of `‖θ_(x,gh)(v, ġh) − Ad_{h⁻¹} θ_(x,g)(v, ġ)‖_F`.
pub fn right_invariance_residual(conn: &ConnectionData, probes: &[InvarianceProbe]) -> Result<f64> {
    let mut worst = 0.0_f64;
    for p in probes {
        let gh = &p.g * &p.h;
        let lhs = theta_eval(conn, &p.x, &gh, &p.v, &(&p.gdot * p.h.matrix()))?;
        let rhs = adjoint(&p.h.inverse()?, &theta_eval(conn, &p.x, &p.g, &p.v, &p.gdot)?)?;
        worst = worst.max((lhs.matrix() - rhs.matrix()).norm());
    }
    Ok(worst)
}
