use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::plot::{sample_lines, MapFn, Plot};
use crate::error::{HolabError, Result};

/// Per-plot evaluator `(p, u, (Y₁, …, Yₙ)) ↦ α_p(u)(Y₁, …, Yₙ) ∈ ℝ^m`.
pub type FormEval = Arc<dyn Fn(&Plot, &[f64], &[Vec<f64>]) -> Vec<f64> + Send + Sync>;

/// Alternating form on the model space `ℝ^d`: `(x, (v₁, …, vₙ)) ↦ ℝ^m`.
pub type ChartForm = Arc<dyn Fn(&[f64], &[Vec<f64>]) -> Vec<f64> + Send + Sync>;

/// A differential form given plot by plot.
#[derive(Clone)]
pub struct PlotForm {
    label: String,
    degree: usize,
    coeff_dim: usize,
    eval: FormEval,
}

impl PlotForm {
    pub fn custom(label: impl Into<String>, degree: usize, coeff_dim: usize, eval: FormEval) -> Self {
        Self {
            label: label.into(),
            degree,
            coeff_dim,
            eval,
        }
    }

    /// Degree-0 form: `α_p = f ∘ p`.
    pub fn function(label: impl Into<String>, coeff_dim: usize, f: MapFn) -> Self {
        Self::custom(label, 0, coeff_dim, Arc::new(move |p, u, _| f(&p.eval(u))))
    }

    /// `α_p = p*ω` for a form `ω` on the model space.
    pub fn pullback_of(label: impl Into<String>, degree: usize, coeff_dim: usize, omega: ChartForm) -> Self {
        Self::custom(
            label,
            degree,
            coeff_dim,
            Arc::new(move |p, u, ys| {
                let pushed: Vec<Vec<f64>> = ys.iter().map(|y| p.push_vector(u, y)).collect();
                omega(&p.eval(u), &pushed)
            }),
        )
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coeff_dim(&self) -> usize {
        self.coeff_dim
    }

    pub fn evaluate(&self, p: &Plot, u: &[f64], ys: &[Vec<f64>]) -> Result<Vec<f64>> {
        if ys.len() != self.degree {
            return Err(HolabError::Shape(format!(
                "form of degree {} given {} vectors",
                self.degree,
                ys.len()
            )));
        }
        if u.len() != p.source_dim() || ys.iter().any(|y| y.len() != p.source_dim()) {
            return Err(HolabError::Shape("tangent vectors must live in the plot domain".into()));
        }
        let v = (self.eval)(p, u, ys);
        if v.len() != self.coeff_dim {
            return Err(HolabError::Shape("form returned the wrong coefficient dimension".into()));
        }
        Ok(v)
    }

    /// Largest change under swapping two arguments (sign flip) and under
    /// linear combination in the first argument, over random inputs.
    pub fn alternation_residual(&self, p: &Plot, trials: usize, seed: u64) -> Result<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q = p.source_dim();
        let mut worst = 0.0_f64;
        for _ in 0..trials {
            let u = random_point(p, &mut rng);
            let ys: Vec<Vec<f64>> = (0..self.degree).map(|_| random_vec(q, &mut rng)).collect();
            let base = self.evaluate(p, &u, &ys)?;
            if self.degree >= 2 {
                let mut swapped = ys.clone();
                swapped.swap(0, 1);
                let s = self.evaluate(p, &u, &swapped)?;
                worst = worst.max(base.iter().zip(&s).map(|(a, b)| (a + b).abs()).fold(0.0, f64::max));
            }
            if self.degree >= 1 {
                let (a, b) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
                let z = random_vec(q, &mut rng);
                let mut comb = ys.clone();
                comb[0] = ys[0].iter().zip(&z).map(|(y, z)| a * y + b * z).collect();
                let mut zs = ys.clone();
                zs[0] = z;
                let lhs = self.evaluate(p, &u, &comb)?;
                let rz = self.evaluate(p, &u, &zs)?;
                for k in 0..lhs.len() {
                    worst = worst.max((lhs[k] - a * base[k] - b * rz[k]).abs());
                }
            }
        }
        Ok(worst)
    }
}

/// `c(x)·det[v_k[i_l]]`: the wedge of the coordinate differentials `dx_i`
/// selected by `indices`, with coefficient map `c`.
pub fn wedge_form(indices: Vec<usize>, coeff: MapFn) -> ChartForm {
    Arc::new(move |x, vs| {
        let n = indices.len();
        let m = DMatrix::from_fn(n, n, |k, l| vs[k][indices[l]]);
        let det = if n == 0 { 1.0 } else { m.determinant() };
        coeff(x).into_iter().map(|c| c * det).collect()
    })
}

fn random_vec(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn random_point(p: &Plot, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..p.source_dim())
        .map(|k| {
            let (a, b) = p.domain().sample_interval(k);
            let inset = 0.1 * (b - a);
            rng.random_range(a + inset..b - inset)
        })
        .collect()
}

/// Compatibility law `α_p = g*α_{p2}` for `p = p2 ∘ g`, tested at
/// `points` of `p`'s domain with `frames` random tangent frames each.
pub fn form_compatibility_residual(
    alpha: &PlotForm,
    p: &Plot,
    p2: &Plot,
    g: &Plot,
    points: &[Vec<f64>],
    frames: usize,
    seed: u64,
) -> Result<f64> {
    if g.source_dim() != p.source_dim() || g.target_dim() != p2.source_dim() {
        return Err(HolabError::Shape("g must map the domain of p into the domain of p2".into()));
    }
    for u in points {
        let a = p.eval(u);
        let b = p2.eval(&g.eval(u));
        let scale = 1.0 + a.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let gap = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        if gap > 1e-9 * scale {
            return Err(HolabError::Precondition(format!(
                "p2 ∘ g differs from p by {gap:.3e} at {u:?}"
            )));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q = p.source_dim();
    let mut worst = 0.0_f64;
    for u in points {
        let gu = g.eval(u);
        for _ in 0..frames.max(1) {
            let ys: Vec<Vec<f64>> = (0..alpha.degree()).map(|_| random_vec(q, &mut rng)).collect();
            let pushed: Vec<Vec<f64>> = ys.iter().map(|y| g.push_vector(u, y)).collect();
            let lhs = alpha.evaluate(p, u, &ys)?;
            let rhs = alpha.evaluate(p2, &gu, &pushed)?;
            worst = worst.max(lhs.iter().zip(&rhs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
        }
    }
    Ok(worst)
}

/// Largest numerical rank of `Dp` over the probe grid: the highest degree
/// of a chart form whose pullback along `p` can be non-zero.
pub fn form_order_probe(p: &Plot, points_per_line: usize) -> usize {
    let mut best = 0;
    for line in sample_lines(p.domain(), points_per_line) {
        for u in &line.points {
            if p.source_dim() == 0 {
                return 0;
            }
            let jac = p.jacobian(u);
            let m = DMatrix::from_fn(p.target_dim(), p.source_dim(), |i, j| jac[i][j]);
            let sv = m.singular_values();
            let smax = sv.max();
            let rank = sv.iter().filter(|s| **s > 1e-8 * smax.max(1e-300) && **s > 1e-12).count();
            best = best.max(rank);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffeology::OpenBox;

    fn area_form() -> PlotForm {
        let omega = wedge_form(vec![0, 1], Arc::new(|x: &[f64]| vec![1.0 + x[0] * x[0], x[1]]));
        PlotForm::pullback_of("area", 2, 2, omega)
    }

    fn polar() -> Plot {
        Plot::from_fn("polar", OpenBox::new(vec![0.2, -1.0], vec![1.5, 2.0]).unwrap(), 2, |u| {
            vec![u[0] * u[1].cos(), u[0] * u[1].sin()]
        })
    }

    #[test]
    fn pulled_back_forms_alternate() {
        let r = area_form().alternation_residual(&polar(), 20, 7).unwrap();
        assert!(r < 1e-10, "{r}");
    }

    #[test]
    fn polar_chart_has_full_form_order_and_a_curve_has_one() {
        assert_eq!(form_order_probe(&polar(), 17), 2);
        let c = Plot::from_fn("c", OpenBox::new(vec![0.0], vec![1.0]).unwrap(), 2, |u| vec![u[0], u[0] * u[0]]);
        assert_eq!(form_order_probe(&c, 17), 1);
    }

    #[test]
    fn composition_mismatch_is_a_precondition_error() {
        let p = polar();
        let g = Plot::identity(p.domain().clone());
        let shifted = Plot::from_fn("shifted", p.domain().clone(), 2, |u| vec![u[0], u[1] + 1.0]);
        let r = form_compatibility_residual(&area_form(), &p, &shifted, &g, &[vec![0.5, 0.5]], 1, 0);
        assert!(matches!(r, Err(HolabError::Precondition(_))));
    }
}
