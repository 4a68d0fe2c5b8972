//! Matrix Lie group and Lie algebra kernel.
//!
//! Algebra and group elements are square real matrices tagged with the
//! ambient matrix algebra. The module provides the bracket, the adjoint
//! action, the matrix exponential and logarithm, the product integral of
//! an algebra-valued path (right logarithmic derivative `g' g⁻¹ = v`) and
//! bracket-generated subalgebra closure.

mod closure;
mod element;
mod expm;
mod integrator;
mod logm;

pub use closure::{
    ad_stability_check, bracket_closure, AdStabilityReport, GenerationEntry, Provenance,
    SubalgebraSpan, DEFAULT_ABS_FLOOR, DEFAULT_RANK_TOLERANCE,
};
pub use element::{
    adjoint, bracket, AlgebraBasis, AlgebraElement, GroupElement, MatrixAlgebra, MEMBERSHIP_TOL,
};
pub use expm::{exp_mat, exp_matrix};
pub use integrator::{product_integral, product_integral_fn, GroupPath};
pub use logm::{log_mat, log_matrix};

use nalgebra::DMatrix;

/// Dense real matrix used for every algebra and group representative.
pub type Mat = DMatrix<f64>;

/// `XY − YX` on raw matrices.
pub fn commutator(x: &Mat, y: &Mat) -> Mat {
    x * y - y * x
}

/// Frobenius inner product.
pub fn frobenius_dot(x: &Mat, y: &Mat) -> f64 {
    x.iter().zip(y.iter()).map(|(a, b)| a * b).sum()
}

/// Max-abs entry.
pub fn max_abs(x: &Mat) -> f64 {
    x.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

pub(crate) fn one_norm(x: &Mat) -> f64 {
    (0..x.ncols())
        .map(|j| x.column(j).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub(crate) fn all_finite(x: &Mat) -> bool {
    x.iter().all(|v| v.is_finite())
}
