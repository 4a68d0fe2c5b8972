use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{HolabError, Result};

/// Evaluator of a map between Euclidean spaces.
pub type MapFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// Open axis-aligned box; bounds may be infinite.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OpenBox {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

/// Half-width used for sampling along unbounded axes.
const UNBOUNDED_SAMPLE_HALF_WIDTH: f64 = 1.0;

impl OpenBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(HolabError::Shape(format!(
                "box bounds of length {} and {}",
                lo.len(),
                hi.len()
            )));
        }
        for (i, (a, b)) in lo.iter().zip(&hi).enumerate() {
            if a.is_nan() || b.is_nan() || a >= b {
                return Err(HolabError::Input(format!("empty box along axis {i}: ({a}, {b})")));
            }
        }
        Ok(Self { lo, hi })
    }

    /// `(a, b)^d`.
    pub fn cube(d: usize, a: f64, b: f64) -> Result<Self> {
        Self::new(vec![a; d], vec![b; d])
    }

    /// All of `ℝ^d`.
    pub fn whole(d: usize) -> Self {
        Self {
            lo: vec![f64::NEG_INFINITY; d],
            hi: vec![f64::INFINITY; d],
        }
    }

    pub fn from_pairs(pairs: &[[f64; 2]]) -> Result<Self> {
        Self::new(pairs.iter().map(|p| p[0]).collect(), pairs.iter().map(|p| p[1]).collect())
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(v, (a, b))| *a < *v && *v < *b)
    }

    /// Distance from `x` to the boundary (negative outside).
    pub fn margin(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(v, (a, b))| (v - a).min(b - v))
            .fold(f64::INFINITY, f64::min)
    }

    /// Finite interval used when sampling axis `i`.
    pub fn sample_interval(&self, i: usize) -> (f64, f64) {
        let (a, b) = (self.lo[i], self.hi[i]);
        match (a.is_finite(), b.is_finite()) {
            (true, true) => (a, b),
            (true, false) => (a, a + 2.0 * UNBOUNDED_SAMPLE_HALF_WIDTH),
            (false, true) => (b - 2.0 * UNBOUNDED_SAMPLE_HALF_WIDTH, b),
            (false, false) => (-UNBOUNDED_SAMPLE_HALF_WIDTH, UNBOUNDED_SAMPLE_HALF_WIDTH),
        }
    }

    /// Largest finite sampling width; sets finite-difference scales.
    pub fn scale(&self) -> f64 {
        (0..self.dim())
            .map(|i| {
                let (a, b) = self.sample_interval(i);
                b - a
            })
            .fold(0.0, f64::max)
    }

    pub fn center(&self) -> Vec<f64> {
        (0..self.dim())
            .map(|i| {
                let (a, b) = self.sample_interval(i);
                0.5 * (a + b)
            })
            .collect()
    }

    /// True when `other` lies inside the closure of `self`.
    pub fn encloses(&self, other: &OpenBox) -> bool {
        self.dim() == other.dim()
            && (0..self.dim()).all(|i| self.lo[i] <= other.lo[i] && other.hi[i] <= self.hi[i])
    }
}

/// Uniformly spaced sample points along one axis-parallel segment.
#[derive(Clone, Debug)]
pub struct SampleLine {
    pub axis: usize,
    pub spacing: f64,
    pub points: Vec<Vec<f64>>,
}

/// Lines on which plots are probed. Each axis gets one line through the
/// center (and two more at 30% and 70% of the other axes when `p ≥ 2`);
/// endpoints stay a small relative inset away from the boundary.
pub fn sample_lines(domain: &OpenBox, points_per_line: usize) -> Vec<SampleLine> {
    let p = domain.dim();
    if p == 0 {
        return vec![SampleLine {
            axis: 0,
            spacing: 1.0,
            points: vec![Vec::new()],
        }];
    }
    let fractions: &[f64] = if p == 1 { &[0.5] } else { &[0.5, 0.3, 0.7] };
    let n = points_per_line.max(2);
    let mut lines = Vec::new();
    for axis in 0..p {
        let (a, b) = domain.sample_interval(axis);
        let inset = 1e-3 * (b - a);
        let (a, b) = (a + inset, b - inset);
        let spacing = (b - a) / (n - 1) as f64;
        for &frac in fractions {
            let base: Vec<f64> = (0..p)
                .map(|k| {
                    let (lo, hi) = domain.sample_interval(k);
                    lo + frac * (hi - lo)
                })
                .collect();
            let points = (0..n)
                .map(|i| {
                    let mut x = base.clone();
                    x[axis] = a + spacing * i as f64;
                    x
                })
                .collect();
            lines.push(SampleLine { axis, spacing, points });
        }
    }
    lines
}

/// A parametrization `O → ℝ^d` of an open box `O ⊂ ℝ^p`.
#[derive(Clone)]
pub struct Plot {
    label: String,
    domain: OpenBox,
    target_dim: usize,
    eval: MapFn,
}

impl fmt::Debug for Plot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Plot")
            .field("label", &self.label)
            .field("domain", &self.domain)
            .field("target_dim", &self.target_dim)
            .finish()
    }
}

impl Plot {
    pub fn new(label: impl Into<String>, domain: OpenBox, target_dim: usize, eval: MapFn) -> Self {
        Self {
            label: label.into(),
            domain,
            target_dim,
            eval,
        }
    }

    pub fn from_fn<F>(label: impl Into<String>, domain: OpenBox, target_dim: usize, f: F) -> Self
    where
        F: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        Self::new(label, domain, target_dim, Arc::new(f))
    }

    /// Constant plot at `point` over `domain` (which may be 0-dimensional).
    pub fn constant(label: impl Into<String>, domain: OpenBox, point: Vec<f64>) -> Self {
        let d = point.len();
        Self::from_fn(label, domain, d, move |_| point.clone())
    }

    /// Identity of a box.
    pub fn identity(domain: OpenBox) -> Self {
        let d = domain.dim();
        Self::from_fn("identity", domain, d, |u| u.to_vec())
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn domain(&self) -> &OpenBox {
        &self.domain
    }

    pub fn source_dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn target_dim(&self) -> usize {
        self.target_dim
    }

    pub fn evaluator(&self) -> &MapFn {
        &self.eval
    }

    pub fn eval(&self, u: &[f64]) -> Vec<f64> {
        (self.eval)(u)
    }

    /// `self ∘ inner`; the result lives on `inner`'s domain.
    pub fn precompose(&self, inner: &Plot) -> Plot {
        let (f, g) = (self.eval.clone(), inner.eval.clone());
        Plot::new(
            format!("{}∘{}", self.label, inner.label),
            inner.domain.clone(),
            self.target_dim,
            Arc::new(move |u| f(&g(u))),
        )
    }

    /// `outer ∘ self` for a map `ℝ^d → ℝ^k`.
    pub fn postcompose(&self, label: &str, outer: MapFn, k: usize) -> Plot {
        let f = self.eval.clone();
        Plot::new(
            format!("{label}∘{}", self.label),
            self.domain.clone(),
            k,
            Arc::new(move |u| outer(&f(u))),
        )
    }

    /// Restriction to a sub-box.
    pub fn restrict(&self, sub: OpenBox) -> Result<Plot> {
        if !self.domain.encloses(&sub) {
            return Err(HolabError::Domain(format!(
                "restriction box is not inside the domain of plot '{}'",
                self.label
            )));
        }
        Ok(Plot::new(self.label.clone(), sub, self.target_dim, self.eval.clone()))
    }

    /// Output coordinates `range` only.
    pub fn components(&self, range: std::ops::Range<usize>) -> Plot {
        let f = self.eval.clone();
        let k = range.len();
        let r = range.clone();
        Plot::new(
            format!("{}[{}..{}]", self.label, range.start, range.end),
            self.domain.clone(),
            k,
            Arc::new(move |u| f(u)[r.clone()].to_vec()),
        )
    }

    /// Jacobian `∂p_i/∂u_j` by fourth-order central differences.
    pub fn jacobian(&self, u: &[f64]) -> Vec<Vec<f64>> {
        let h = 1e-3 * self.domain.scale().max(1e-3);
        let p = self.source_dim();
        let mut jac = vec![vec![0.0; p]; self.target_dim];
        for j in 0..p {
            let shifted = |s: f64| {
                let mut x = u.to_vec();
                x[j] += s * h;
                self.eval(&x)
            };
            let (p2, p1, m1, m2) = (shifted(2.0), shifted(1.0), shifted(-1.0), shifted(-2.0));
            for (i, row) in jac.iter_mut().enumerate() {
                row[j] = (-p2[i] + 8.0 * p1[i] - 8.0 * m1[i] + m2[i]) / (12.0 * h);
            }
        }
        jac
    }

    /// Directional derivative `Dp(u)·y`.
    pub fn push_vector(&self, u: &[f64], y: &[f64]) -> Vec<f64> {
        self.jacobian(u)
            .iter()
            .map(|row| row.iter().zip(y).map(|(a, b)| a * b).sum())
            .collect()
    }
}
