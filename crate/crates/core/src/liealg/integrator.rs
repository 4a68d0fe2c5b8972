//! Product integral of an algebra-valued path.
//!
//! Solves `g'(t) g(t)⁻¹ = v(t)`, `g(0) = e` on `[0, 1]` with a fourth-order
//! Magnus step on each subinterval `[t, t + h]`:
//!
//! ```text
//! Ω = h/6 (v₀ + 4 v½ + v₁) + h²/12 [v₁, v₀],     g(t + h) = exp(Ω) g(t)
//! ```
//!
//! The commutator term is what makes the step fourth order for
//! non-commuting paths; for commuting paths the step reduces to Simpson's
//! rule inside a single exponential.

use super::{commutator, exp_mat, AlgebraElement, GroupElement, Mat, MatrixAlgebra};
use crate::error::{HolabError, Result};

/// A group-valued path sampled at `steps + 1` uniform nodes of `[0, 1]`.
#[derive(Clone, Debug)]
pub struct GroupPath {
    pub tag: MatrixAlgebra,
    pub values: Vec<Mat>,
}

impl GroupPath {
    pub fn steps(&self) -> usize {
        self.values.len() - 1
    }

    pub fn time(&self, i: usize) -> f64 {
        i as f64 / self.steps() as f64
    }

    pub fn at(&self, i: usize) -> GroupElement {
        GroupElement::raw(self.values[i].clone(), self.tag)
    }

    pub fn last(&self) -> GroupElement {
        self.at(self.values.len() - 1)
    }

    /// Largest defining-relation residual over all nodes.
    pub fn max_relation_residual(&self) -> f64 {
        self.values
            .iter()
            .map(|m| self.tag.group_residual(m))
            .fold(0.0, f64::max)
    }
}

/// Integrates from uniform samples of `v` on `[0, 1]`.
///
/// `samples.len() - 1` must be a positive multiple of `steps`. When the
/// sampling stride is even, the midpoint of each step is read from the
/// samples; otherwise it is reconstructed by cubic interpolation of the
/// step nodes.
pub fn product_integral(samples: &[AlgebraElement], steps: usize) -> Result<Vec<GroupElement>> {
    if samples.is_empty() {
        return Err(HolabError::Input("product integral of an empty sample".into()));
    }
    if steps == 0 {
        return Err(HolabError::Input("product integral needs at least one step".into()));
    }
    let intervals = samples.len() - 1;
    if intervals < steps || !intervals.is_multiple_of(steps) {
        return Err(HolabError::Input(format!(
            "{} samples do not subdivide {steps} uniform steps",
            samples.len()
        )));
    }
    let tag = samples[0].tag();
    if samples.iter().any(|s| s.tag() != tag) {
        return Err(HolabError::Shape("samples from different algebras".into()));
    }
    let stride = intervals / steps;
    let nodes: Vec<&Mat> = (0..=steps).map(|i| samples[i * stride].matrix()).collect();
    let mids: Vec<Mat> = if stride.is_multiple_of(2) {
        (0..steps)
            .map(|i| samples[i * stride + stride / 2].matrix().clone())
            .collect()
    } else {
        interpolate_midpoints(&nodes)
    };
    let h = 1.0 / steps as f64;
    let mut g = Mat::identity(tag.size(), tag.size());
    let mut out = Vec::with_capacity(steps + 1);
    out.push(GroupElement::raw(g.clone(), tag));
    for i in 0..steps {
        let omega = magnus4(nodes[i], &mids[i], nodes[i + 1], h);
        g = exp_mat(&omega)? * g;
        out.push(GroupElement::raw(g.clone(), tag));
    }
    Ok(out)
}

/// Integrates a path given as a fallible evaluator, sampled at the step
/// nodes and midpoints (`2·steps + 1` evaluations).
pub fn product_integral_fn<F>(tag: MatrixAlgebra, steps: usize, v: F) -> Result<GroupPath>
where
    F: Fn(f64) -> Result<Mat>,
{
    if steps == 0 {
        return Err(HolabError::Input("product integral needs at least one step".into()));
    }
    let n = tag.size();
    let h = 1.0 / steps as f64;
    let mut g = Mat::identity(n, n);
    let mut values = Vec::with_capacity(steps + 1);
    values.push(g.clone());
    let mut left = v(0.0)?;
    for i in 0..steps {
        let t = i as f64 * h;
        let mid = v(t + 0.5 * h)?;
        let right = v(if i + 1 == steps { 1.0 } else { t + h })?;
        let omega = magnus4(&left, &mid, &right, h);
        g = exp_mat(&omega)? * g;
        if !super::all_finite(&g) {
            return Err(HolabError::Numeric(format!("product integral blew up at t = {t}")));
        }
        values.push(g.clone());
        left = right;
    }
    Ok(GroupPath { tag, values })
}

fn magnus4(v0: &Mat, vmid: &Mat, v1: &Mat, h: f64) -> Mat {
    let mean = (v0 + vmid * 4.0 + v1) * (h / 6.0);
    mean + commutator(v1, v0) * (h * h / 12.0)
}

fn interpolate_midpoints(nodes: &[&Mat]) -> Vec<Mat> {
    let m = nodes.len() - 1;
    (0..m)
        .map(|i| {
            if m < 3 {
                (nodes[i] + nodes[i + 1]) * 0.5
            } else if i == 0 {
                (nodes[0] * 5.0 + nodes[1] * 15.0 - nodes[2] * 5.0 + nodes[3]) / 16.0
            } else if i == m - 1 {
                (nodes[m] * 5.0 + nodes[m - 1] * 15.0 - nodes[m - 2] * 5.0 + nodes[m - 3]) / 16.0
            } else {
                (nodes[i] * 9.0 + nodes[i + 1] * 9.0 - nodes[i - 1] - nodes[i + 2]) / 16.0
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liealg::{exp_matrix, MatrixAlgebra};

    fn so3() -> crate::liealg::AlgebraBasis {
        MatrixAlgebra::So(3).standard_basis()
    }

    #[test]
    fn constant_path_is_the_exponential() {
        let b = so3();
        let x = b.combine(&[0.3, -0.8, 1.4]).unwrap();
        let path = product_integral_fn(x.tag(), 20, |_| Ok(x.matrix().clone())).unwrap();
        for i in 0..=20 {
            let t = i as f64 / 20.0;
            let expected = exp_matrix(&x.scale(t)).unwrap();
            assert!((&path.values[i] - expected.matrix()).amax() < 1e-13);
        }
    }

    #[test]
    fn commuting_family_integrates_the_coefficient() {
        // v(t) = f(t) L_z with f(t) = cos(3t) + t², ∫₀¹ f = sin(3)/3 + 1/3.
        let b = so3();
        let lz = b.elements()[2].clone();
        let f = |t: f64| (3.0 * t).cos() + t * t;
        let integral = 3f64.sin() / 3.0 + 1.0 / 3.0;
        let path = product_integral_fn(lz.tag(), 200, |t| Ok(lz.matrix() * f(t))).unwrap();
        let expected = exp_matrix(&lz.scale(integral)).unwrap();
        assert!((path.last().matrix() - expected.matrix()).amax() < 1e-10);
    }

    #[test]
    fn non_commuting_path_matches_fine_self_oracle() {
        let b = so3();
        let (lx, ly) = (b.elements()[0].clone(), b.elements()[1].clone());
        let v = |t: f64| Ok(lx.matrix() + ly.matrix() * t);
        let coarse = product_integral_fn(lx.tag(), 100, v).unwrap();
        let fine = product_integral_fn(lx.tag(), 1600, v).unwrap();
        let diff = (coarse.last().matrix() - fine.last().matrix()).amax();
        assert!(diff < 1e-8, "{diff}");
        assert!(coarse.max_relation_residual() < 1e-12);
    }

    #[test]
    fn sampled_and_functional_forms_agree() {
        let b = so3();
        let (lx, lz) = (b.elements()[0].clone(), b.elements()[2].clone());
        let v = |t: f64| &(&lx * (2.0 * t).sin()) + &(&lz * (1.0 - t));
        let steps = 64;
        let with_mid: Vec<_> = (0..=2 * steps).map(|i| v(i as f64 / (2 * steps) as f64)).collect();
        let nodes_only: Vec<_> = (0..=steps).map(|i| v(i as f64 / steps as f64)).collect();
        let f = product_integral_fn(lx.tag(), steps, |t| Ok(v(t).into_matrix())).unwrap();
        let a = product_integral(&with_mid, steps).unwrap();
        let c = product_integral(&nodes_only, steps).unwrap();
        assert!((a[steps].matrix() - f.last().matrix()).amax() < 1e-14);
        // Cubic midpoint reconstruction keeps fourth order.
        assert!((c[steps].matrix() - f.last().matrix()).amax() < 1e-7);
    }

    #[test]
    fn fourth_order_convergence() {
        let b = so3();
        let (lx, ly, lz) = (b.elements()[0].clone(), b.elements()[1].clone(), b.elements()[2].clone());
        let v = |t: f64| {
            Ok(lx.matrix() * (1.0 + (4.0 * t).sin()) + ly.matrix() * (3.0 * t).cos() * 2.0 + lz.matrix() * t)
        };
        let g = |n| product_integral_fn(lx.tag(), n, v).unwrap().last().into_matrix();
        let (a, b2, c) = (g(50), g(100), g(200));
        let order = ((&a - &b2).norm() / (&b2 - &c).norm()).log2();
        assert!((3.5..=4.5).contains(&order), "order {order}");
    }

    #[test]
    fn empty_sample_is_an_input_error() {
        assert!(matches!(product_integral(&[], 4), Err(HolabError::Input(_))));
    }
}
