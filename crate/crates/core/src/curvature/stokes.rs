use super::local::{curvature_at, default_fd_step, SignConvention};
use crate::bundle::ConnectionData;
use crate::error::{HolabError, Result};
use crate::holonomy::Loop;
use crate::liealg::{exp_mat, frobenius_dot, GroupElement};

/// Boundary samples of the flux quadrature.
pub const STOKES_BOUNDARY_SAMPLES: usize = 4096;

/// Gauss–Legendre nodes and weights on `[0, 1]`, five points.
const GL5: [(f64, f64); 5] = [
    (0.046_910_077_030_668_0, 0.118_463_442_528_094_5),
    (0.230_765_344_947_158_5, 0.239_314_335_249_683_2),
    (0.5, 0.284_444_444_444_444_4),
    (0.769_234_655_052_841_5, 0.239_314_335_249_683_2),
    (0.953_089_922_969_332, 0.118_463_442_528_094_5),
];

#[derive(Clone, Debug)]
pub struct StokesCheck {
    pub flux: f64,
    /// `exp(−flux · b)`, `b` the single basis element.
    pub predicted: GroupElement,
    pub holonomy: GroupElement,
    /// `‖hol − predicted‖_F / (|flux| ‖b‖_F)`, absolute when the flux is tiny.
    pub relative_error: f64,
}

/// Curvature density `f` with `F(e_x, e_y) = f · b` on a 2-dimensional
/// base with a 1-dimensional structure algebra.
fn density(conn: &ConnectionData, x: &[f64], h: f64) -> Result<f64> {
    let f = curvature_at(conn, x, &[1.0, 0.0], &[0.0, 1.0], h, SignConvention::Oracle)?;
    let b = conn.basis().elements()[0].matrix();
    Ok(frobenius_dot(f.matrix(), b) / frobenius_dot(b, b))
}

/// Flux `∬ f dx dy` over the region enclosed by `lp`, by Green's theorem
/// as `∮ P dy` with `P(x, y) = ∫_{x₀}^{x} f(s, y) ds`, `x₀` the basepoint
/// abscissa. The boundary integral `∫₀¹ P(γ) y′ dt` is the trapezoid rule,
/// spectrally accurate on a smooth closed loop (the continuous shoelace
/// formula when `f ≡ 1`); the inner integral is Gauss–Legendre.
pub fn enclosed_flux(conn: &ConnectionData, lp: &Loop, samples: usize) -> Result<f64> {
    if conn.base_dim() != 2 || conn.basis().dim() != 1 {
        return Err(HolabError::Input(
            "flux quadrature needs a 2-dimensional base and a 1-dimensional algebra".into(),
        ));
    }
    if lp.offset().iter().any(|o| *o != 0.0) {
        return Err(HolabError::Input("flux quadrature needs a contractible closed loop".into()));
    }
    if samples < 8 {
        return Err(HolabError::Input("flux quadrature needs at least 8 boundary samples".into()));
    }
    let h = default_fd_step(conn);
    let x0 = lp.basepoint()[0];
    let p = |x: &[f64]| -> Result<f64> {
        let len = x[0] - x0;
        let mut acc = 0.0;
        for (node, w) in GL5 {
            acc += w * density(conn, &[x0 + node * len, x[1]], h)?;
        }
        Ok(acc * len)
    };
    let mut flux = 0.0;
    for k in 0..samples {
        let t = k as f64 / samples as f64;
        flux += p(&lp.path().position(t))? * lp.path().velocity(t)[1];
    }
    let flux = flux / samples as f64;
    Ok(flux)
}

/// Compares an abelian holonomy with `exp(−flux · b)`.
pub fn abelian_stokes_check(conn: &ConnectionData, lp: &Loop, steps: usize, samples: usize) -> Result<StokesCheck> {
    let flux = enclosed_flux(conn, lp, samples)?;
    let b = conn.basis().elements()[0].matrix();
    let predicted = GroupElement::new(exp_mat(&(b * -flux))?, conn.tag())?;
    let holonomy = crate::holonomy::holonomy_element(conn, lp, &GroupElement::identity(conn.tag()), steps)?.element;
    let scale = flux.abs() * b.norm();
    let gap = holonomy.distance(&predicted);
    Ok(StokesCheck {
        flux,
        predicted,
        holonomy,
        relative_error: if scale > 1e-12 { gap / scale } else { gap },
    })
}
