use std::fmt;
use std::sync::Arc;

use crate::error::{HolabError, Result};

/// `t ↦ ℝ^d` on `[0, 1]`.
pub type CurveFn = Arc<dyn Fn(f64) -> Vec<f64> + Send + Sync>;

/// Finite-difference step used when a path has no analytic derivative.
pub const DEFAULT_FD_STEP: f64 = 1e-3;

/// Largest endpoint mismatch accepted by [`SmoothPath::concat`].
pub const JOIN_TOL: f64 = 1e-10;

fn psi(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        (-1.0 / t).exp()
    }
}

/// Zero where `ψ` underflows, so tiny `t` never gives `0 / 0`.
fn dpsi(t: f64) -> f64 {
    let p = psi(t);
    if p == 0.0 {
        0.0
    } else {
        p / (t * t)
    }
}

/// Flat smooth step `φ(t) = ψ(t) / (ψ(t) + ψ(1 − t))`, `ψ(t) = e^{−1/t}`,
/// and its derivative. `φ` is constant outside `(0, 1)` and every
/// derivative vanishes at both ends.
pub fn smooth_step(t: f64) -> (f64, f64) {
    if t <= 0.0 {
        return (0.0, 0.0);
    }
    if t >= 1.0 {
        return (1.0, 0.0);
    }
    let (a, b) = (psi(t), psi(1.0 - t));
    let s = a + b;
    let da = dpsi(t);
    let db = -dpsi(1.0 - t);
    (a / s, (da * s - a * (da + db)) / (s * s))
}

/// A smooth path `[0, 1] → ℝ^d`, optionally with an analytic velocity.
#[derive(Clone)]
pub struct SmoothPath {
    label: String,
    dim: usize,
    eval: CurveFn,
    deriv: Option<CurveFn>,
    stationary_ends: bool,
}

impl fmt::Debug for SmoothPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SmoothPath")
            .field("label", &self.label)
            .field("dim", &self.dim)
            .field("analytic_velocity", &self.deriv.is_some())
            .field("stationary_ends", &self.stationary_ends)
            .finish()
    }
}

impl SmoothPath {
    pub fn new(label: impl Into<String>, dim: usize, eval: CurveFn) -> Self {
        Self {
            label: label.into(),
            dim,
            eval,
            deriv: None,
            stationary_ends: false,
        }
    }

    pub fn from_fn(label: impl Into<String>, dim: usize, f: impl Fn(f64) -> Vec<f64> + Send + Sync + 'static) -> Self {
        Self::new(label, dim, Arc::new(f))
    }

    pub fn with_derivative(mut self, deriv: CurveFn) -> Self {
        self.deriv = Some(deriv);
        self
    }

    /// Declares that all derivatives vanish at both endpoints, which makes
    /// concatenation with this path smooth without re-timing.
    pub fn with_stationary_ends(mut self, stationary: bool) -> Self {
        self.stationary_ends = stationary;
        self
    }

    pub fn constant(point: Vec<f64>) -> Self {
        let dim = point.len();
        let p = point.clone();
        Self::from_fn("constant", dim, move |_| p.clone())
            .with_derivative(Arc::new(move |_| vec![0.0; dim]))
            .with_stationary_ends(true)
    }

    /// Closed or open polygon through `vertices`, each edge re-timed by the
    /// smooth step so the path is smooth at every corner.
    pub fn polygon(label: impl Into<String>, vertices: Vec<Vec<f64>>) -> Result<Self> {
        if vertices.len() < 2 {
            return Err(HolabError::Input("polygon needs at least two vertices".into()));
        }
        let dim = vertices[0].len();
        if dim == 0 || vertices.iter().any(|v| v.len() != dim) {
            return Err(HolabError::Shape("polygon vertices must share a positive dimension".into()));
        }
        let n = vertices.len() - 1;
        let verts = Arc::new(vertices);
        let locate = move |t: f64| {
            let s = (t.clamp(0.0, 1.0) * n as f64).min(n as f64);
            let k = (s.floor() as usize).min(n - 1);
            (k, s - k as f64)
        };
        let (v1, v2) = (verts.clone(), verts);
        Ok(Self::from_fn(label, dim, move |t| {
            let (k, u) = locate(t);
            let (phi, _) = smooth_step(u);
            v1[k].iter().zip(&v1[k + 1]).map(|(a, b)| a + phi * (b - a)).collect()
        })
        .with_derivative(Arc::new(move |t| {
            let (k, u) = locate(t);
            let (_, dphi) = smooth_step(u);
            v2[k]
                .iter()
                .zip(&v2[k + 1])
                .map(|(a, b)| n as f64 * dphi * (b - a))
                .collect()
        }))
        .with_stationary_ends(true))
    }

    pub fn segment(a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        Self::polygon("segment", vec![a, b])
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn relabel(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn has_analytic_velocity(&self) -> bool {
        self.deriv.is_some()
    }

    pub fn stationary_ends(&self) -> bool {
        self.stationary_ends
    }

    pub fn position(&self, t: f64) -> Vec<f64> {
        (self.eval)(t)
    }

    pub fn start(&self) -> Vec<f64> {
        self.position(0.0)
    }

    pub fn end(&self) -> Vec<f64> {
        self.position(1.0)
    }

    pub fn velocity(&self, t: f64) -> Vec<f64> {
        self.velocity_with_step(t, DEFAULT_FD_STEP)
    }

    /// Analytic velocity when present, else a fourth-order difference with
    /// step `h ≤ 1/8` that stays inside `[0, 1]`.
    pub fn velocity_with_step(&self, t: f64, h: f64) -> Vec<f64> {
        if let Some(d) = &self.deriv {
            return d(t);
        }
        let f = |s: f64| (self.eval)(s);
        let combine = |terms: &[(f64, f64)], denom: f64| {
            let mut out = vec![0.0; self.dim];
            for (s, w) in terms {
                for (o, v) in out.iter_mut().zip(f(*s)) {
                    *o += w * v;
                }
            }
            out.into_iter().map(|v| v / denom).collect()
        };
        if t - 2.0 * h >= 0.0 && t + 2.0 * h <= 1.0 {
            combine(
                &[(t - 2.0 * h, 1.0), (t - h, -8.0), (t + h, 8.0), (t + 2.0 * h, -1.0)],
                12.0 * h,
            )
        } else if t - 2.0 * h < 0.0 {
            combine(
                &[(t, -25.0), (t + h, 48.0), (t + 2.0 * h, -36.0), (t + 3.0 * h, 16.0), (t + 4.0 * h, -3.0)],
                12.0 * h,
            )
        } else {
            combine(
                &[(t, 25.0), (t - h, -48.0), (t - 2.0 * h, 36.0), (t - 3.0 * h, -16.0), (t - 4.0 * h, 3.0)],
                12.0 * h,
            )
        }
    }

    /// Positions at `n + 1` uniform nodes.
    pub fn samples(&self, n: usize) -> Vec<Vec<f64>> {
        (0..=n).map(|i| self.position(i as f64 / n.max(1) as f64)).collect()
    }

    /// `γ(1 − t)`.
    pub fn reverse(&self) -> Self {
        let (e, d) = (self.eval.clone(), self.clone());
        Self {
            label: format!("reverse({})", self.label),
            dim: self.dim,
            eval: Arc::new(move |t| e(1.0 - t)),
            deriv: Some(Arc::new(move |t| d.velocity(1.0 - t).into_iter().map(|v| -v).collect())),
            stationary_ends: self.stationary_ends,
        }
    }

    /// `γ ∘ g` for a map `g` of `[0, 1]` with derivative `dg`.
    pub fn reparametrize(&self, g: CurveScalar, dg: CurveScalar) -> Self {
        let (e, d, g2) = (self.eval.clone(), self.clone(), g.clone());
        Self {
            label: format!("reparam({})", self.label),
            dim: self.dim,
            eval: Arc::new(move |t| e(g(t))),
            deriv: Some(Arc::new(move |t| {
                let s = dg(t);
                d.velocity(g2(t)).into_iter().map(|v| v * s).collect()
            })),
            stationary_ends: false,
        }
    }

    /// `γ ∘ φ`: same trace, all derivatives vanish at the endpoints.
    pub fn retimed(&self) -> Self {
        let mut out = self.reparametrize(Arc::new(|t| smooth_step(t).0), Arc::new(|t| smooth_step(t).1));
        out.label = self.label.clone();
        out.stationary_ends = true;
        out
    }

    /// `s ↦ γ(t s)`.
    pub fn truncate(&self, t: f64) -> Self {
        let (e, d) = (self.eval.clone(), self.clone());
        Self {
            label: format!("{}[0,{t}]", self.label),
            dim: self.dim,
            eval: Arc::new(move |s| e(t * s)),
            deriv: Some(Arc::new(move |s| d.velocity(t * s).into_iter().map(|v| v * t).collect())),
            stationary_ends: false,
        }
    }

    /// `γ + offset`.
    pub fn translate(&self, offset: &[f64]) -> Result<Self> {
        if offset.len() != self.dim {
            return Err(HolabError::Shape("translation offset dimension".into()));
        }
        if offset.iter().all(|o| *o == 0.0) {
            return Ok(self.clone());
        }
        let (e, off) = (self.eval.clone(), offset.to_vec());
        let d = self.clone();
        Ok(Self {
            label: self.label.clone(),
            dim: self.dim,
            eval: Arc::new(move |t| e(t).into_iter().zip(&off).map(|(x, o)| x + o).collect()),
            deriv: Some(Arc::new(move |t| d.velocity(t))),
            stationary_ends: self.stationary_ends,
        })
    }

    /// `second ∨ first`: traverses `first` on `[0, ½]`, then `second`. When
    /// both paths have stationary ends the halves are affine in time, which
    /// is already smooth; otherwise each half is re-timed by the smooth step.
    pub fn concat(second: &SmoothPath, first: &SmoothPath) -> Result<Self> {
        if first.dim != second.dim {
            return Err(HolabError::Shape("concatenated paths differ in dimension".into()));
        }
        let (a, b) = (first.end(), second.start());
        let gap = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        if gap > JOIN_TOL * (1.0 + a.iter().fold(0.0_f64, |m, v| m.max(v.abs()))) {
            return Err(HolabError::Join(format!(
                "'{}' ends {gap:.3e} away from where '{}' starts",
                first.label, second.label
            )));
        }
        let affine = first.stationary_ends && second.stationary_ends;
        let retime = move |u: f64| if affine { (u, 1.0) } else { smooth_step(u) };
        let (f1, s1) = (first.clone(), second.clone());
        let (f2, s2) = (first.clone(), second.clone());
        Ok(Self {
            label: format!("{} ∨ {}", second.label, first.label),
            dim: first.dim,
            eval: Arc::new(move |t| {
                if t < 0.5 {
                    f1.position(retime(2.0 * t).0)
                } else {
                    s1.position(retime(2.0 * t - 1.0).0)
                }
            }),
            deriv: Some(Arc::new(move |t| {
                let (path, u) = if t < 0.5 { (&f2, 2.0 * t) } else { (&s2, 2.0 * t - 1.0) };
                let (phi, dphi) = retime(u);
                if dphi == 0.0 {
                    return vec![0.0; path.dim];
                }
                path.velocity(phi).into_iter().map(|v| 2.0 * dphi * v).collect()
            })),
            stationary_ends: true,
        })
    }
}

/// Scalar map of the parameter interval.
pub type CurveScalar = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smooth_step_is_flat_at_the_ends_and_steepest_in_the_middle() {
        assert_eq!(smooth_step(0.0), (0.0, 0.0));
        assert_eq!(smooth_step(1.0), (1.0, 0.0));
        let (v, d) = smooth_step(0.5);
        assert!((v - 0.5).abs() < 1e-15);
        assert!((d - 2.0).abs() < 1e-12);
        for i in 1..100 {
            let t = i as f64 / 100.0;
            let h = 1e-6;
            let fd = (smooth_step(t + h).0 - smooth_step(t - h).0) / (2.0 * h);
            assert!((fd - smooth_step(t).1).abs() < 1e-6);
        }
    }

    #[test]
    fn finite_difference_velocity_is_accurate_including_the_ends() {
        let p = SmoothPath::from_fn("c", 2, |t| vec![(3.0 * t).sin(), t * t * t]);
        for &t in &[0.0, 1e-4, 0.3, 0.9999, 1.0] {
            let v = p.velocity(t);
            assert!((v[0] - 3.0 * (3.0 * t).cos()).abs() < 1e-9, "{t}");
            assert!((v[1] - 3.0 * t * t).abs() < 1e-9, "{t}");
        }
    }

    #[test]
    fn concat_joins_and_rejects_gaps() {
        let a = SmoothPath::segment(vec![0.0, 0.0], vec![1.0, 0.0]).unwrap();
        let b = SmoothPath::segment(vec![1.0, 0.0], vec![1.0, 1.0]).unwrap();
        let c = SmoothPath::concat(&b, &a).unwrap();
        assert_eq!(c.position(0.25), a.position(0.5));
        assert_eq!(c.end(), vec![1.0, 1.0]);
        assert!(c.velocity(0.5).iter().all(|v| v.abs() < 1e-12));
        assert!(matches!(SmoothPath::concat(&a, &a), Err(HolabError::Join(_))));
    }
}
