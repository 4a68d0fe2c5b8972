use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use super::{commutator, frobenius_dot, max_abs, Mat};
use crate::error::{HolabError, Result};

/// Residual bound for the defining relations of an algebra or group tag.
pub const MEMBERSHIP_TOL: f64 = 1e-8;

const DET_FLOOR: f64 = 1e-12;

/// The ambient matrix algebra (and its connected group) of an element.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MatrixAlgebra {
    /// Antisymmetric n×n matrices; group SO(n).
    So(usize),
    /// All n×n matrices; group GL(n).
    Gl(usize),
}

impl MatrixAlgebra {
    pub fn size(&self) -> usize {
        match *self {
            MatrixAlgebra::So(n) | MatrixAlgebra::Gl(n) => n,
        }
    }

    pub fn algebra_name(&self) -> String {
        match *self {
            MatrixAlgebra::So(n) => format!("so({n})"),
            MatrixAlgebra::Gl(n) => format!("gl({n})"),
        }
    }

    pub fn group_name(&self) -> String {
        match *self {
            MatrixAlgebra::So(n) => format!("SO({n})"),
            MatrixAlgebra::Gl(n) => format!("GL({n})"),
        }
    }

    /// Parses group or algebra names: `SO(3)`, `so3`, `so(3)`, `U(1)`, `GL(2)`.
    pub fn parse(name: &str) -> Option<Self> {
        let compact: String = name
            .chars()
            .filter(|c| !c.is_whitespace() && *c != '(' && *c != ')')
            .collect::<String>()
            .to_ascii_lowercase();
        if compact == "u1" {
            return Some(MatrixAlgebra::So(2));
        }
        let (kind, digits) = if let Some(rest) = compact.strip_prefix("so") {
            ("so", rest)
        } else if let Some(rest) = compact.strip_prefix("gl") {
            ("gl", rest)
        } else {
            return None;
        };
        let n: usize = digits.parse().ok()?;
        if n == 0 {
            return None;
        }
        Some(if kind == "so" {
            MatrixAlgebra::So(n)
        } else {
            MatrixAlgebra::Gl(n)
        })
    }

    /// Max-abs residual of the algebra's defining relation.
    pub fn algebra_residual(&self, m: &Mat) -> f64 {
        match self {
            MatrixAlgebra::So(_) => max_abs(&(m + m.transpose())),
            MatrixAlgebra::Gl(_) => 0.0,
        }
    }

    /// Max-abs residual of the group's defining relation (`MᵀM = I`, `det M = 1`).
    pub fn group_residual(&self, m: &Mat) -> f64 {
        match self {
            MatrixAlgebra::So(n) => {
                let orth = max_abs(&(m.transpose() * m - Mat::identity(*n, *n)));
                orth.max((m.determinant() - 1.0).abs())
            }
            MatrixAlgebra::Gl(_) => 0.0,
        }
    }

    /// Standard basis. For so(3) this is (L_x, L_y, L_z) with `[L_x, L_y] = L_z`;
    /// for so(n) otherwise `E_ji − E_ij` over `i < j` in lexicographic order.
    pub fn standard_basis(&self) -> AlgebraBasis {
        let n = self.size();
        let mut mats = Vec::new();
        match self {
            MatrixAlgebra::So(3) => {
                for (i, j) in [(2, 1), (0, 2), (1, 0)] {
                    let mut m = Mat::zeros(3, 3);
                    m[(i, j)] = 1.0;
                    m[(j, i)] = -1.0;
                    mats.push(m);
                }
            }
            MatrixAlgebra::So(_) => {
                for i in 0..n {
                    for j in (i + 1)..n {
                        let mut m = Mat::zeros(n, n);
                        m[(j, i)] = 1.0;
                        m[(i, j)] = -1.0;
                        mats.push(m);
                    }
                }
            }
            MatrixAlgebra::Gl(_) => {
                for i in 0..n {
                    for j in 0..n {
                        let mut m = Mat::zeros(n, n);
                        m[(i, j)] = 1.0;
                        mats.push(m);
                    }
                }
            }
        }
        let elements = mats
            .into_iter()
            .map(|m| AlgebraElement::raw(m, *self))
            .collect();
        AlgebraBasis::from_elements(&self.algebra_name(), *self, elements)
            .expect("standard bases are independent")
    }

    /// Dimension of the algebra as a real vector space.
    pub fn dim(&self) -> usize {
        let n = self.size();
        match self {
            MatrixAlgebra::So(_) => n * (n - 1) / 2,
            MatrixAlgebra::Gl(_) => n * n,
        }
    }
}

impl fmt::Display for MatrixAlgebra {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.algebra_name())
    }
}

/// An element of a matrix Lie algebra.
#[derive(Clone, Debug, PartialEq)]
pub struct AlgebraElement {
    matrix: Mat,
    tag: MatrixAlgebra,
}

impl AlgebraElement {
    /// Checked constructor: shape and defining-relation residual.
    pub fn new(matrix: Mat, tag: MatrixAlgebra) -> Result<Self> {
        let n = tag.size();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(HolabError::Shape(format!(
                "{}x{} matrix is not an element of {}",
                matrix.nrows(),
                matrix.ncols(),
                tag
            )));
        }
        let residual = tag.algebra_residual(&matrix);
        if residual > MEMBERSHIP_TOL * (1.0 + max_abs(&matrix)) {
            return Err(HolabError::Input(format!(
                "matrix violates the defining relation of {tag} (residual {residual:.3e})"
            )));
        }
        Ok(Self { matrix, tag })
    }

    /// Unchecked constructor for matrices produced by closed operations.
    pub(crate) fn raw(matrix: Mat, tag: MatrixAlgebra) -> Self {
        Self { matrix, tag }
    }

    pub fn zero(tag: MatrixAlgebra) -> Self {
        let n = tag.size();
        Self::raw(Mat::zeros(n, n), tag)
    }

    pub fn matrix(&self) -> &Mat {
        &self.matrix
    }

    pub fn into_matrix(self) -> Mat {
        self.matrix
    }

    pub fn tag(&self) -> MatrixAlgebra {
        self.tag
    }

    pub fn norm(&self) -> f64 {
        self.matrix.norm()
    }

    pub fn dot(&self, other: &AlgebraElement) -> f64 {
        frobenius_dot(&self.matrix, &other.matrix)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::raw(&self.matrix * s, self.tag)
    }

    /// Membership residual of the defining relation.
    pub fn relation_residual(&self) -> f64 {
        self.tag.algebra_residual(&self.matrix)
    }
}

impl Add for &AlgebraElement {
    type Output = AlgebraElement;
    fn add(self, rhs: &AlgebraElement) -> AlgebraElement {
        AlgebraElement::raw(&self.matrix + &rhs.matrix, self.tag)
    }
}

impl Sub for &AlgebraElement {
    type Output = AlgebraElement;
    fn sub(self, rhs: &AlgebraElement) -> AlgebraElement {
        AlgebraElement::raw(&self.matrix - &rhs.matrix, self.tag)
    }
}

impl Mul<f64> for &AlgebraElement {
    type Output = AlgebraElement;
    fn mul(self, rhs: f64) -> AlgebraElement {
        self.scale(rhs)
    }
}

impl Neg for &AlgebraElement {
    type Output = AlgebraElement;
    fn neg(self) -> AlgebraElement {
        self.scale(-1.0)
    }
}

/// An element of a matrix group.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupElement {
    matrix: Mat,
    tag: MatrixAlgebra,
}

impl GroupElement {
    /// Checked constructor: shape, invertibility and defining relation.
    pub fn new(matrix: Mat, tag: MatrixAlgebra) -> Result<Self> {
        let n = tag.size();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(HolabError::Shape(format!(
                "{}x{} matrix is not an element of {}",
                matrix.nrows(),
                matrix.ncols(),
                tag.group_name()
            )));
        }
        if !super::all_finite(&matrix) {
            return Err(HolabError::Numeric("non-finite group element".into()));
        }
        if matrix.determinant().abs() <= DET_FLOOR {
            return Err(HolabError::Numeric("group element is singular".into()));
        }
        let residual = tag.group_residual(&matrix);
        if residual > MEMBERSHIP_TOL {
            return Err(HolabError::Input(format!(
                "matrix is not in {} (residual {residual:.3e})",
                tag.group_name()
            )));
        }
        Ok(Self { matrix, tag })
    }

    pub(crate) fn raw(matrix: Mat, tag: MatrixAlgebra) -> Self {
        Self { matrix, tag }
    }

    pub fn identity(tag: MatrixAlgebra) -> Self {
        let n = tag.size();
        Self::raw(Mat::identity(n, n), tag)
    }

    pub fn matrix(&self) -> &Mat {
        &self.matrix
    }

    pub fn into_matrix(self) -> Mat {
        self.matrix
    }

    pub fn tag(&self) -> MatrixAlgebra {
        self.tag
    }

    pub fn inverse(&self) -> Result<Self> {
        invert(&self.matrix, self.tag).map(|m| Self::raw(m, self.tag))
    }

    pub fn relation_residual(&self) -> f64 {
        self.tag.group_residual(&self.matrix)
    }

    /// Frobenius distance to another element.
    pub fn distance(&self, other: &GroupElement) -> f64 {
        (&self.matrix - &other.matrix).norm()
    }

    /// Frobenius distance to the identity.
    pub fn distance_to_identity(&self) -> f64 {
        let n = self.matrix.nrows();
        (&self.matrix - Mat::identity(n, n)).norm()
    }
}

impl Mul for &GroupElement {
    type Output = GroupElement;
    fn mul(self, rhs: &GroupElement) -> GroupElement {
        GroupElement::raw(&self.matrix * &rhs.matrix, self.tag)
    }
}

pub(crate) fn invert(m: &Mat, tag: MatrixAlgebra) -> Result<Mat> {
    if let MatrixAlgebra::So(_) = tag {
        if tag.group_residual(m) <= MEMBERSHIP_TOL {
            return Ok(m.transpose());
        }
    }
    if m.determinant().abs() <= DET_FLOOR {
        return Err(HolabError::Numeric("singular group element".into()));
    }
    m.clone()
        .try_inverse()
        .ok_or_else(|| HolabError::Numeric("singular group element".into()))
}

fn check_pair(x: &Mat, y: &Mat, what: &str) -> Result<()> {
    if x.shape() != y.shape() || x.nrows() != x.ncols() {
        return Err(HolabError::Shape(format!(
            "{what}: incompatible shapes {:?} and {:?}",
            x.shape(),
            y.shape()
        )));
    }
    Ok(())
}

/// Lie bracket `XY − YX`.
pub fn bracket(x: &AlgebraElement, y: &AlgebraElement) -> Result<AlgebraElement> {
    check_pair(&x.matrix, &y.matrix, "bracket")?;
    if x.tag != y.tag {
        return Err(HolabError::Shape(format!(
            "bracket: elements of {} and {}",
            x.tag, y.tag
        )));
    }
    Ok(AlgebraElement::raw(commutator(&x.matrix, &y.matrix), x.tag))
}

/// Adjoint action `Ad_g X = g X g⁻¹`.
pub fn adjoint(g: &GroupElement, x: &AlgebraElement) -> Result<AlgebraElement> {
    check_pair(&g.matrix, &x.matrix, "adjoint")?;
    let inv = invert(&g.matrix, g.tag)?;
    Ok(AlgebraElement::raw(&g.matrix * &x.matrix * inv, x.tag))
}

/// A linearly independent presentation of a matrix Lie algebra.
#[derive(Clone, Debug)]
pub struct AlgebraBasis {
    name: String,
    tag: MatrixAlgebra,
    elements: Vec<AlgebraElement>,
    /// `c[(i * d + j) * d + k]` is the `e_k` coefficient of `[e_i, e_j]`.
    structure_constants: Vec<f64>,
}

#[derive(Deserialize)]
struct BasisJson {
    name: String,
    matrix_size: usize,
    basis: Vec<Vec<f64>>,
}

impl AlgebraBasis {
    pub fn from_elements(
        name: &str,
        tag: MatrixAlgebra,
        elements: Vec<AlgebraElement>,
    ) -> Result<Self> {
        if elements.is_empty() {
            return Err(HolabError::Input("empty algebra basis".into()));
        }
        let n = tag.size();
        let d = elements.len();
        let flat = Mat::from_fn(d, n * n, |i, k| elements[i].matrix[(k / n, k % n)]);
        let sv = flat.clone().singular_values();
        let smax = sv.max();
        let smin = sv.min();
        if smax == 0.0 || smin <= super::DEFAULT_RANK_TOLERANCE * smax {
            return Err(HolabError::Input(format!(
                "basis elements of `{name}` are linearly dependent"
            )));
        }
        // Least-squares coordinates of each bracket in the basis.
        let gram = &flat * flat.transpose();
        let gram_inv = gram
            .try_inverse()
            .ok_or_else(|| HolabError::Numeric("singular Gram matrix".into()))?;
        let mut structure_constants = vec![0.0; d * d * d];
        for i in 0..d {
            for j in 0..d {
                let br = commutator(&elements[i].matrix, &elements[j].matrix);
                let rhs = nalgebra::DVector::from_fn(d, |k, _| frobenius_dot(&elements[k].matrix, &br));
                let coeffs = &gram_inv * rhs;
                for k in 0..d {
                    structure_constants[(i * d + j) * d + k] = coeffs[k];
                }
            }
        }
        let basis = Self {
            name: name.to_string(),
            tag,
            elements,
            structure_constants,
        };
        let scale = basis
            .elements
            .iter()
            .map(|e| max_abs(&e.matrix))
            .fold(0.0, f64::max);
        if basis.structure_residual() > 1e-10 * (1.0 + scale * scale) {
            return Err(HolabError::Input(format!(
                "basis of `{name}` is not closed under the bracket"
            )));
        }
        Ok(basis)
    }

    /// Loads `{"name", "matrix_size", "basis": [[row-major entries]]}`.
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: BasisJson = serde_json::from_str(text)?;
        Self::from_json_parts(&raw.name, raw.matrix_size, &raw.basis)
    }

    pub(crate) fn from_json_parts(name: &str, n: usize, basis: &[Vec<f64>]) -> Result<Self> {
        if n == 0 {
            return Err(HolabError::validation("matrix_size", "must be positive"));
        }
        let mut mats = Vec::with_capacity(basis.len());
        for (i, entries) in basis.iter().enumerate() {
            if entries.len() != n * n {
                return Err(HolabError::validation(
                    format!("basis[{i}]"),
                    format!("expected {} entries, found {}", n * n, entries.len()),
                ));
            }
            mats.push(Mat::from_row_slice(n, n, entries));
        }
        let antisymmetric = mats
            .iter()
            .all(|m| MatrixAlgebra::So(n).algebra_residual(m) <= MEMBERSHIP_TOL);
        let tag = if antisymmetric {
            MatrixAlgebra::So(n)
        } else {
            MatrixAlgebra::Gl(n)
        };
        let elements = mats
            .into_iter()
            .map(|m| AlgebraElement::raw(m, tag))
            .collect();
        Self::from_elements(name, tag, elements)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn tag(&self) -> MatrixAlgebra {
        self.tag
    }

    pub fn elements(&self) -> &[AlgebraElement] {
        &self.elements
    }

    pub fn dim(&self) -> usize {
        self.elements.len()
    }

    pub fn element(&self, i: usize) -> Option<&AlgebraElement> {
        self.elements.get(i)
    }

    /// Coefficient of `e_k` in `[e_i, e_j]`.
    pub fn structure_constant(&self, i: usize, j: usize, k: usize) -> f64 {
        let d = self.dim();
        self.structure_constants[(i * d + j) * d + k]
    }

    /// Max-abs mismatch between `[e_i, e_j]` and `Σ_k c_ijk e_k`.
    pub fn structure_residual(&self) -> f64 {
        let d = self.dim();
        let n = self.tag.size();
        let mut worst = 0.0_f64;
        for i in 0..d {
            for j in 0..d {
                let br = commutator(&self.elements[i].matrix, &self.elements[j].matrix);
                let mut rebuilt = Mat::zeros(n, n);
                for k in 0..d {
                    rebuilt += &self.elements[k].matrix * self.structure_constant(i, j, k);
                }
                worst = worst.max(max_abs(&(br - rebuilt)));
            }
        }
        worst
    }

    /// `Σ c_k e_k`.
    pub fn combine(&self, coeffs: &[f64]) -> Result<AlgebraElement> {
        if coeffs.len() != self.dim() {
            return Err(HolabError::Shape(format!(
                "{} coefficients for a {}-dimensional basis",
                coeffs.len(),
                self.dim()
            )));
        }
        let n = self.tag.size();
        let mut m = Mat::zeros(n, n);
        for (c, e) in coeffs.iter().zip(&self.elements) {
            m += &e.matrix * *c;
        }
        Ok(AlgebraElement::raw(m, self.tag))
    }
}
