//! Principal matrix logarithm by inverse scaling and squaring:
//! Denman–Beavers square roots until the argument is close to the
//! identity, then the series of `log(I + Y)`.

use std::f64::consts::PI;

use super::{all_finite, exp_mat, one_norm, AlgebraElement, GroupElement, Mat};
use crate::error::{HolabError, Result};

const MAX_SQRTS: usize = 60;
const SERIES_RADIUS: f64 = 0.25;

/// Principal logarithm of a group element.
///
/// Fails when the element has an eigenvalue on (or numerically at) the
/// closed negative real axis, or when `exp(log g)` does not reproduce `g`.
pub fn log_matrix(g: &GroupElement) -> Result<AlgebraElement> {
    let l = log_mat(g.matrix())?;
    Ok(AlgebraElement::raw(l, g.tag()))
}

pub fn log_mat(a: &Mat) -> Result<Mat> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(HolabError::Shape("log of a non-square matrix".into()));
    }
    if !all_finite(a) {
        return Err(HolabError::Numeric("log of a matrix with non-finite entries".into()));
    }
    let ident = Mat::identity(n, n);
    let mut x = a.clone();
    let mut k = 0;
    while one_norm(&(&x - &ident)) > SERIES_RADIUS {
        if k == MAX_SQRTS {
            return Err(HolabError::Numeric(
                "logarithm: square-root ladder did not approach the identity".into(),
            ));
        }
        x = sqrt_denman_beavers(&x)?;
        k += 1;
    }
    let y = &x - &ident;
    let mut sum = Mat::zeros(n, n);
    let mut power = ident.clone();
    for j in 1..200 {
        power = &power * &y;
        let term = &power / j as f64;
        if j % 2 == 1 {
            sum += &term;
        } else {
            sum -= &term;
        }
        if term.amax() < 1e-18 {
            break;
        }
    }
    let log = sum * 2f64.powi(k as i32);

    // Principal branch: spectrum of the log must stay in |Im λ| < π.
    let sigma_max = log.clone().singular_values().max();
    let normal = (&log * log.transpose() - log.transpose() * &log).amax() <= 1e-9 * (1.0 + sigma_max * sigma_max);
    if normal && sigma_max >= PI - 1e-9 {
        return Err(HolabError::Numeric(format!(
            "logarithm outside the principal domain (spectral radius {sigma_max:.6})"
        )));
    }
    let back = exp_mat(&log)?;
    let mismatch = (&back - a).amax();
    if !mismatch.is_finite() || mismatch > 1e-8 * (1.0 + a.amax()) {
        return Err(HolabError::Numeric(format!(
            "logarithm does not reproduce its argument (mismatch {mismatch:.3e})"
        )));
    }
    Ok(log)
}

fn sqrt_denman_beavers(a: &Mat) -> Result<Mat> {
    let n = a.nrows();
    let mut y = a.clone();
    let mut z = Mat::identity(n, n);
    for _ in 0..100 {
        let y_inv = y
            .clone()
            .try_inverse()
            .ok_or_else(|| HolabError::Numeric("logarithm: singular square-root iterate".into()))?;
        let z_inv = z
            .clone()
            .try_inverse()
            .ok_or_else(|| HolabError::Numeric("logarithm: singular square-root iterate".into()))?;
        let y_next = (&y + z_inv) * 0.5;
        let z_next = (&z + y_inv) * 0.5;
        let change = (&y_next - &y).amax();
        y = y_next;
        z = z_next;
        if !all_finite(&y) {
            break;
        }
        if change <= 1e-15 * (1.0 + y.amax()) {
            return Ok(y);
        }
    }
    Err(HolabError::Numeric(
        "logarithm: square-root iteration did not converge (eigenvalue on the negative real axis?)"
            .into(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liealg::{exp_matrix, MatrixAlgebra};

    #[test]
    fn inverts_exp_inside_principal_domain() {
        let basis = MatrixAlgebra::So(3).standard_basis();
        let x = basis.combine(&[0.4, -1.1, 0.9]).unwrap();
        let g = exp_matrix(&x).unwrap();
        let l = log_matrix(&g).unwrap();
        assert!((l.matrix() - x.matrix()).amax() < 1e-12);
    }

    #[test]
    fn identity_has_zero_log() {
        let l = log_mat(&Mat::identity(3, 3)).unwrap();
        assert_eq!(l.amax(), 0.0);
    }

    #[test]
    fn large_rotation_angle_reduces_to_principal_branch() {
        // Rotation by 5 rad equals rotation by 5 − 2π.
        let basis = MatrixAlgebra::So(2).standard_basis();
        let g = exp_matrix(&basis.elements()[0].scale(5.0)).unwrap();
        let l = log_matrix(&g).unwrap();
        assert!((l.matrix()[(1, 0)] - (5.0 - 2.0 * PI)).abs() < 1e-11);
    }

    #[test]
    fn half_turn_is_flagged() {
        let basis = MatrixAlgebra::So(2).standard_basis();
        let g = exp_matrix(&basis.elements()[0].scale(PI)).unwrap();
        assert!(log_matrix(&g).is_err());
    }

    #[test]
    fn general_matrix_round_trip() {
        let a = Mat::from_row_slice(3, 3, &[1.2, 0.3, -0.1, 0.05, 0.9, 0.2, 0.0, -0.3, 1.1]);
        let l = log_mat(&a).unwrap();
        assert!((exp_mat(&l).unwrap() - a).amax() < 1e-12);
    }
}
