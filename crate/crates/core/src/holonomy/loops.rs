use crate::bundle::{BaseChart, SmoothPath, JOIN_TOL};
use crate::error::{HolabError, Result};

/// Largest closure gap `‖γ(1) − γ(0) − offset‖∞` accepted for a loop.
pub const CLOSURE_TOL: f64 = 1e-12;

/// A loop based at `γ(0)`. On a periodic chart the path may end at a
/// lattice translate `γ(0) + offset` of its start, which closes it in the
/// quotient.
#[derive(Clone, Debug)]
pub struct Loop {
    id: String,
    path: SmoothPath,
    offset: Vec<f64>,
}

fn sup_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn scale(x: &[f64]) -> f64 {
    1.0 + x.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

impl Loop {
    pub fn new(id: impl Into<String>, path: SmoothPath) -> Result<Self> {
        let offset = vec![0.0; path.dim()];
        Self::build(id.into(), path, offset)
    }

    /// A loop in the quotient of `chart` by its period lattice.
    pub fn with_offset(id: impl Into<String>, path: SmoothPath, offset: Vec<f64>, chart: &BaseChart) -> Result<Self> {
        if !chart.is_lattice_vector(&offset, CLOSURE_TOL) {
            return Err(HolabError::Input(format!("offset {offset:?} is not a period of chart '{}'", chart.name())));
        }
        Self::build(id.into(), path, offset)
    }

    fn build(id: String, path: SmoothPath, offset: Vec<f64>) -> Result<Self> {
        if offset.len() != path.dim() {
            return Err(HolabError::Shape("loop offset dimension".into()));
        }
        let (a, b) = (path.start(), path.end());
        let shifted: Vec<f64> = a.iter().zip(&offset).map(|(x, o)| x + o).collect();
        let gap = sup_dist(&shifted, &b);
        if gap > CLOSURE_TOL * scale(&b) {
            return Err(HolabError::Input(format!("path '{id}' does not close: gap {gap:.3e}")));
        }
        Ok(Self { id, path, offset })
    }

    pub fn constant(id: impl Into<String>, point: Vec<f64>) -> Self {
        let dim = point.len();
        Self {
            id: id.into(),
            path: SmoothPath::constant(point),
            offset: vec![0.0; dim],
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn path(&self) -> &SmoothPath {
        &self.path
    }

    pub fn basepoint(&self) -> Vec<f64> {
        self.path.start()
    }

    pub fn offset(&self) -> &[f64] {
        &self.offset
    }

    /// Re-timed so all derivatives vanish at the basepoint.
    pub fn normalized(&self) -> Self {
        if self.path.stationary_ends() {
            return self.clone();
        }
        Self {
            id: self.id.clone(),
            path: self.path.retimed(),
            offset: self.offset.clone(),
        }
    }

    /// `γ⁻¹`, translated back to the original basepoint.
    pub fn reverse(&self) -> Self {
        let back: Vec<f64> = self.offset.iter().map(|o| -o).collect();
        Self {
            id: format!("rev({})", self.id),
            path: self.path.reverse().translate(&back).expect("dimension checked at construction"),
            offset: back,
        }
    }

    /// `second ∨ first`: run `first`, then `second`.
    pub fn concat(second: &Loop, first: &Loop) -> Result<Self> {
        let (a, b) = (first.basepoint(), second.basepoint());
        if a.len() != b.len() {
            return Err(HolabError::Shape("concatenated loops differ in dimension".into()));
        }
        if sup_dist(&a, &b) > JOIN_TOL * scale(&a) {
            return Err(HolabError::Join(format!(
                "loops '{}' and '{}' have different basepoints",
                first.id, second.id
            )));
        }
        let moved = second.path.translate(&first.offset)?;
        let offset = first.offset.iter().zip(&second.offset).map(|(p, q)| p + q).collect();
        Ok(Self {
            id: format!("{} ∨ {}", second.id, first.id),
            path: SmoothPath::concat(&moved, &first.path)?,
            offset,
        })
    }

    /// Same loop traversed along `γ ∘ g` for a monotone `g` fixing the ends.
    pub fn reparametrize(&self, g: crate::bundle::CurveScalar, dg: crate::bundle::CurveScalar) -> Self {
        Self {
            id: format!("reparam({})", self.id),
            path: self.path.reparametrize(g, dg),
            offset: self.offset.clone(),
        }
    }
}

/// `γ⁻¹(t) = γ(1 − t)`.
pub fn reverse(path: &SmoothPath) -> SmoothPath {
    path.reverse()
}

/// `γ2 ∨ γ1`: run `γ1`, then `γ2`.
pub fn concat(second: &SmoothPath, first: &SmoothPath) -> Result<SmoothPath> {
    SmoothPath::concat(second, first)
}
