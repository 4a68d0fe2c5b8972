use serde::Serialize;

use crate::bundle::{ConnectionData, SmoothPath};
use crate::error::{HolabError, Result};
use crate::holonomy::{holonomy_element, Loop};
use crate::liealg::{commutator, log_matrix, AlgebraElement, GroupElement, Mat};

/// Sign of the commutator term in the local curvature.
///
/// `Oracle`: `F(v, w) = dA(v, w) + [A v, A w]`, the sign reproduced by the
/// holonomy of small loops. `Paper`: `dA(v, w) − [A v, A w]`, kept as a
/// toggle; it disagrees with the small-loop limit on non-abelian forms.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SignConvention {
    #[default]
    Oracle,
    Paper,
}

impl SignConvention {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "oracle" => Some(Self::Oracle),
            "paper" => Some(Self::Paper),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Oracle => "oracle",
            Self::Paper => "paper",
        }
    }

    fn sign(self) -> f64 {
        match self {
            Self::Oracle => 1.0,
            Self::Paper => -1.0,
        }
    }
}

/// `10⁻⁴ ×` the chart's sampling scale.
pub fn default_fd_step(conn: &ConnectionData) -> f64 {
    1e-4 * conn.chart().domain().scale()
}

/// `∂_k A_i(x)` by fourth-order central differences.
fn fd_partials(conn: &ConnectionData, x: &[f64], h: f64) -> Result<Vec<Vec<Mat>>> {
    let d = conn.base_dim();
    let mut out = Vec::with_capacity(d);
    for k in 0..d {
        let at = |s: f64| -> Result<Vec<Mat>> {
            let mut y = x.to_vec();
            y[k] += s;
            conn.components(&y)
        };
        let (m2, m1, p1, p2) = (at(-2.0 * h)?, at(-h)?, at(h)?, at(2.0 * h)?);
        out.push(
            (0..d)
                .map(|i| (&m2[i] - &m1[i] * 8.0 + &p1[i] * 8.0 - &p2[i]) / (12.0 * h))
                .collect(),
        );
    }
    Ok(out)
}

/// Local curvature `F(v, w)` at `x`, with `dA` exact when the form
/// carries its derivative and finite-differenced otherwise.
pub fn curvature_at(
    conn: &ConnectionData,
    x: &[f64],
    v: &[f64],
    w: &[f64],
    fd_step: f64,
    convention: SignConvention,
) -> Result<AlgebraElement> {
    let d = conn.base_dim();
    if v.len() != d || w.len() != d {
        return Err(HolabError::Shape("tangent vectors must match the base dimension".into()));
    }
    conn.chart().check(x)?;
    if !(fd_step > 0.0) {
        return Err(HolabError::Input("finite-difference step must be positive".into()));
    }
    let margin = conn.chart().domain().margin(x);
    let needed = if conn.has_exact_da() { fd_step } else { 2.0 * fd_step };
    if margin < needed {
        return Err(HolabError::Domain(format!(
            "point {x:?} is within {needed:.3e} of the chart boundary"
        )));
    }
    let partials = match conn.partials(x) {
        Some(p) => p?,
        None => fd_partials(conn, x, fd_step)?,
    };
    let n = conn.tag().size();
    let mut da = Mat::zeros(n, n);
    for (k, pk) in partials.iter().enumerate() {
        for (i, dka) in pk.iter().enumerate() {
            let c = v[k] * w[i] - w[k] * v[i];
            if c != 0.0 {
                da += dka * c;
            }
        }
    }
    let av = conn.a_matrix(x, v)?;
    let aw = conn.a_matrix(x, w)?;
    let f = da + commutator(&av, &aw) * convention.sign();
    Ok(AlgebraElement::raw(f, conn.tag()))
}

/// The parallelogram `x → x + εv → x + εv + εw → x + εw → x`.
pub fn parallelogram_loop(x: &[f64], v: &[f64], w: &[f64], eps: f64) -> Result<Loop> {
    let shift = |a: &[f64], s: f64, b: &[f64], t: f64| -> Vec<f64> {
        a.iter().zip(b).zip(x).map(|((p, q), o)| o + s * p + t * q).collect()
    };
    let verts = vec![
        x.to_vec(),
        shift(v, eps, w, 0.0),
        shift(v, eps, w, eps),
        shift(v, 0.0, w, eps),
        x.to_vec(),
    ];
    Loop::new("parallelogram", SmoothPath::polygon("parallelogram", verts)?)
}

/// `−log(hol)/ε²` for the ε-parallelogram spanned by `(v, w)` at `x`.
/// Tends to `F(v, w)` under the oracle convention with `O(ε)` error.
pub fn small_loop_oracle(
    conn: &ConnectionData,
    x: &[f64],
    v: &[f64],
    w: &[f64],
    eps: f64,
    steps: usize,
) -> Result<AlgebraElement> {
    if !(eps > 0.0) {
        return Err(HolabError::Input("loop size must be positive".into()));
    }
    let lp = parallelogram_loop(x, v, w, eps)?;
    let rec = holonomy_element(conn, &lp, &GroupElement::identity(conn.tag()), steps)?;
    let log = match rec.log {
        Some(l) => l,
        None => log_matrix(&rec.element)?,
    };
    Ok(log.scale(-1.0 / (eps * eps)))
}

#[derive(Clone, Debug)]
pub struct RichardsonEstimate {
    pub eps: [f64; 3],
    pub values: [AlgebraElement; 3],
    /// `(8 f(ε/4) − 6 f(ε/2) + f(ε)) / 3`: cancels the `ε` and `ε²` terms.
    pub limit: AlgebraElement,
}

/// Small-loop values at `ε, ε/2, ε/4` and their two-level Richardson limit.
pub fn small_loop_limit(
    conn: &ConnectionData,
    x: &[f64],
    v: &[f64],
    w: &[f64],
    eps: f64,
    steps: usize,
) -> Result<RichardsonEstimate> {
    let e = [eps, eps / 2.0, eps / 4.0];
    let f0 = small_loop_oracle(conn, x, v, w, e[0], steps)?;
    let f1 = small_loop_oracle(conn, x, v, w, e[1], steps)?;
    let f2 = small_loop_oracle(conn, x, v, w, e[2], steps)?;
    let limit = AlgebraElement::raw(
        (f2.matrix() * 8.0 - f1.matrix() * 6.0 + f0.matrix()) / 3.0,
        conn.tag(),
    );
    Ok(RichardsonEstimate {
        eps: e,
        values: [f0, f1, f2],
        limit,
    })
}

/// Relative Frobenius mismatch `‖a − b‖ / ‖b‖`; absolute below `floor`.
pub fn relative_mismatch(a: &AlgebraElement, b: &AlgebraElement, floor: f64) -> f64 {
    let diff = (a.matrix() - b.matrix()).norm();
    let scale = b.norm();
    if scale <= floor {
        diff
    } else {
        diff / scale
    }
}

/// Agreement bound of the small-loop limit with the local curvature.
pub const SIGN_ORACLE_TOL: f64 = 0.02;

#[derive(Clone, Debug, Serialize)]
pub struct SignOraclePoint {
    pub x: Vec<f64>,
    /// Coordinate pair `(i, j)` of the loop plane.
    pub pair: (usize, usize),
    pub oracle_mismatch: f64,
    pub paper_mismatch: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SignOracleReport {
    pub eps: f64,
    pub steps: usize,
    pub points: Vec<SignOraclePoint>,
    pub max_oracle_mismatch: f64,
    pub max_paper_mismatch: f64,
}

impl SignOracleReport {
    /// The oracle convention agrees everywhere.
    pub fn oracle_passes(&self) -> bool {
        self.max_oracle_mismatch <= SIGN_ORACLE_TOL
    }

    /// `SignConvention::Paper` agrees everywhere.
    pub fn paper_passes(&self) -> bool {
        self.max_paper_mismatch <= SIGN_ORACLE_TOL
    }
}

/// Richardson limit of the small-loop oracle on every coordinate plane at
/// each point, compared with both sign conventions. Mismatches are
/// relative, absolute below `1e-8`.
pub fn sign_oracle_check(conn: &ConnectionData, points: &[Vec<f64>], eps: f64, steps: usize) -> Result<SignOracleReport> {
    let d = conn.base_dim();
    let h = default_fd_step(conn);
    let mut out = Vec::new();
    for x in points {
        for i in 0..d {
            for j in i + 1..d {
                let (mut v, mut w) = (vec![0.0; d], vec![0.0; d]);
                v[i] = 1.0;
                w[j] = 1.0;
                let est = small_loop_limit(conn, x, &v, &w, eps, steps)?;
                let oracle = curvature_at(conn, x, &v, &w, h, SignConvention::Oracle)?;
                let paper = curvature_at(conn, x, &v, &w, h, SignConvention::Paper)?;
                out.push(SignOraclePoint {
                    x: x.clone(),
                    pair: (i, j),
                    oracle_mismatch: relative_mismatch(&est.limit, &oracle, 1e-8),
                    paper_mismatch: relative_mismatch(&est.limit, &paper, 1e-8),
                });
            }
        }
    }
    Ok(SignOracleReport {
        eps,
        steps,
        max_oracle_mismatch: out.iter().map(|p| p.oracle_mismatch).fold(0.0, f64::max),
        max_paper_mismatch: out.iter().map(|p| p.paper_mismatch).fold(0.0, f64::max),
        points: out,
    })
}
