//! Matrix exponential by scaling and squaring with diagonal Padé
//! approximants of degree 3, 5, 7, 9 or 13 (Higham 2005 thresholds).

use super::{all_finite, one_norm, AlgebraElement, GroupElement, Mat};
use crate::error::{HolabError, Result};

const THETA: [(usize, f64); 4] = [
    (3, 1.495_585_217_958_292e-2),
    (5, 2.539_398_330_063_23e-1),
    (7, 9.504_178_996_162_932e-1),
    (9, 2.097_847_961_257_068),
];
const THETA_13: f64 = 5.371_920_351_148_152;

const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [
    17_297_280.0,
    8_648_640.0,
    1_995_840.0,
    277_200.0,
    25_200.0,
    1_512.0,
    56.0,
    1.0,
];
const B9: [f64; 10] = [
    17_643_225_600.0,
    8_821_612_800.0,
    2_075_673_600.0,
    302_702_400.0,
    30_270_240.0,
    2_162_160.0,
    110_880.0,
    3_960.0,
    90.0,
    1.0,
];
const B13: [f64; 14] = [
    64_764_752_532_480_000.0,
    32_382_376_266_240_000.0,
    7_771_770_303_897_600.0,
    1_187_353_796_428_800.0,
    129_060_195_264_000.0,
    10_559_470_521_600.0,
    670_442_572_800.0,
    33_522_128_640.0,
    1_323_241_920.0,
    40_840_800.0,
    960_960.0,
    16_380.0,
    182.0,
    1.0,
];

/// `exp(X)` for an algebra element, tagged as an element of the group.
pub fn exp_matrix(x: &AlgebraElement) -> Result<GroupElement> {
    exp_mat(x.matrix()).map(|m| GroupElement::raw(m, x.tag()))
}

/// Matrix exponential of a raw square matrix.
pub fn exp_mat(a: &Mat) -> Result<Mat> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(HolabError::Shape("exp of a non-square matrix".into()));
    }
    if !all_finite(a) {
        return Err(HolabError::Numeric("exp of a matrix with non-finite entries".into()));
    }
    if n == 0 {
        return Ok(Mat::zeros(0, 0));
    }
    let norm = one_norm(a);
    for (degree, theta) in THETA {
        if norm <= theta {
            let coeffs: &[f64] = match degree {
                3 => &B3,
                5 => &B5,
                7 => &B7,
                _ => &B9,
            };
            return pade_low(a, coeffs);
        }
    }
    let s = if norm > THETA_13 {
        (norm / THETA_13).log2().ceil().max(0.0) as i32
    } else {
        0
    };
    let scaled = a * 2f64.powi(-s);
    let mut result = pade13(&scaled)?;
    for _ in 0..s {
        result = &result * &result;
    }
    if !all_finite(&result) {
        return Err(HolabError::Numeric("matrix exponential overflowed".into()));
    }
    Ok(result)
}

fn pade_low(a: &Mat, b: &[f64]) -> Result<Mat> {
    let n = a.nrows();
    let ident = Mat::identity(n, n);
    let a2 = a * a;
    // Even powers I, A², A⁴, ...
    let mut even = vec![ident.clone()];
    while even.len() * 2 < b.len() {
        let next = even.last().unwrap() * &a2;
        even.push(next);
    }
    let mut u_inner = Mat::zeros(n, n);
    let mut v = Mat::zeros(n, n);
    for (k, p) in even.iter().enumerate() {
        if 2 * k + 1 < b.len() {
            u_inner += p * b[2 * k + 1];
        }
        v += p * b[2 * k];
    }
    let u = a * u_inner;
    solve_pade(&u, &v)
}

fn pade13(a: &Mat) -> Result<Mat> {
    let n = a.nrows();
    let b = &B13;
    let ident = Mat::identity(n, n);
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let u_high = &a6 * (&a6 * b[13] + &a4 * b[11] + &a2 * b[9]);
    let u = a * (u_high + &a6 * b[7] + &a4 * b[5] + &a2 * b[3] + &ident * b[1]);
    let v_high = &a6 * (&a6 * b[12] + &a4 * b[10] + &a2 * b[8]);
    let v = v_high + &a6 * b[6] + &a4 * b[4] + &a2 * b[2] + &ident * b[0];
    solve_pade(&u, &v)
}

/// Solves `(V − U) R = V + U`.
fn solve_pade(u: &Mat, v: &Mat) -> Result<Mat> {
    let p = v + u;
    let q = v - u;
    q.lu()
        .solve(&p)
        .ok_or_else(|| HolabError::Numeric("singular Padé denominator".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liealg::MatrixAlgebra;

    /// Plain Taylor series with a fixed number of terms.
    fn taylor_exp(a: &Mat, terms: usize) -> Mat {
        let n = a.nrows();
        let mut sum = Mat::identity(n, n);
        let mut term = Mat::identity(n, n);
        for k in 1..terms {
            term = &term * a / k as f64;
            sum += &term;
        }
        sum
    }

    fn rodrigues_z(theta: f64) -> Mat {
        let (s, c) = theta.sin_cos();
        Mat::from_row_slice(3, 3, &[c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0])
    }

    #[test]
    fn zero_maps_to_identity() {
        let e = exp_mat(&Mat::zeros(4, 4)).unwrap();
        assert_eq!(e, Mat::identity(4, 4));
    }

    #[test]
    fn rotation_about_z_matches_rodrigues() {
        let basis = MatrixAlgebra::So(3).standard_basis();
        let lz = &basis.elements()[2];
        for theta in [0.001, 0.3, 1.0, 2.5, 3.1, 7.0, 40.0] {
            let e = exp_matrix(&lz.scale(theta)).unwrap();
            let diff = (e.matrix() - rodrigues_z(theta)).amax();
            assert!(diff < 1e-13, "theta {theta}: {diff}");
        }
    }

    #[test]
    fn large_norm_matches_long_taylor_series() {
        // Deterministic 3x3 with Frobenius norm 10.
        let raw = Mat::from_row_slice(3, 3, &[0.3, -1.2, 0.5, 0.9, 0.1, -0.7, -0.4, 0.8, -0.2]);
        let a = &raw * (10.0 / raw.norm());
        let e = exp_mat(&a).unwrap();
        let t = taylor_exp(&a, 2048);
        let rel = (&e - &t).norm() / t.norm();
        assert!(rel < 1e-8, "relative error {rel}");
    }

    #[test]
    fn every_pade_branch_inverts() {
        let raw = Mat::from_row_slice(3, 3, &[0.1, 0.7, -0.3, -0.2, 0.4, 0.9, 0.5, -0.6, 0.2]);
        for scale in [1e-3, 0.1, 0.5, 1.5, 4.0, 12.0] {
            let a = &raw * scale;
            let e = exp_mat(&a).unwrap();
            let einv = exp_mat(&(-&a)).unwrap();
            let err = (&e * &einv - Mat::identity(3, 3)).amax();
            assert!(err < 1e-10, "scale {scale}: {err}");
            let t = taylor_exp(&a, 200);
            assert!((&e - &t).norm() / t.norm() < 1e-9);
        }
    }

    #[test]
    fn rejects_non_finite() {
        let mut a = Mat::zeros(2, 2);
        a[(0, 1)] = f64::NAN;
        assert!(matches!(exp_mat(&a), Err(HolabError::Numeric(_))));
    }
}
