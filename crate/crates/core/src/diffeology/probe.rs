//! Sample-based smoothness probe.
//!
//! For each derivative order `j ≤ k` the probe forms central differences
//! `D_m` at spacings `m·h`, `m ∈ {1, 2, 4}` (symmetric averaged stencil for
//! odd `j`), with `e₁ = max|D₁ − D₂|` and `e₂ = max|D₂ − D₄|` over the
//! common stencil centers. A smooth map has `e₂/e₁ ≈ 4`; a kink in the
//! `j`-th derivative keeps `e₂/e₁ ≤ 1`. Order `j` passes when `e₁` is below
//! the tolerance plus the round-off floor of the stencil, or when
//! `e₂/e₁ ≥ CONTRACTION_MIN`. With too few samples for three levels the
//! probe falls back to `e₁` alone, and with one level only finiteness is
//! checked.

use serde::Serialize;

use crate::error::{HolabError, Result};

pub const DEFAULT_PROBE_POINTS: usize = 257;
pub const DEFAULT_PROBE_TOL: f64 = 1e-6;
pub const DEFAULT_PROBE_ORDER: usize = 3;
/// Minimal error contraction under halving of the spacing.
pub const CONTRACTION_MIN: f64 = 1.5;
const ROUNDOFF_SAFETY: f64 = 8.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ProbeConfig {
    pub points: usize,
    pub order: usize,
    pub tol: f64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            points: DEFAULT_PROBE_POINTS,
            order: DEFAULT_PROBE_ORDER,
            tol: DEFAULT_PROBE_TOL,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProbeOutcome {
    pub smooth: bool,
    /// First derivative order that failed.
    pub failed_order: Option<usize>,
    pub e1: f64,
    pub e2: f64,
    pub levels: usize,
}

fn binomial_row(j: usize) -> Vec<f64> {
    let mut row = vec![1.0];
    for _ in 0..j {
        let mut next = vec![1.0; row.len() + 1];
        for k in 1..row.len() {
            next[k] = row[k - 1] + row[k];
        }
        row = next;
    }
    row
}

/// Half-width in samples of the order-`j` stencil at stride `m`.
fn half_width(j: usize, m: usize) -> usize {
    m * j.div_ceil(2)
}

/// Order-`j` central difference at sample `c` with stride `m`.
fn central(samples: &[f64], c: usize, j: usize, m: usize, h: f64) -> f64 {
    let coeffs = binomial_row(j);
    let hm = h * m as f64;
    let delta = |shift2: isize| -> f64 {
        // δ^j centered at c + shift2·m/2, valid when j + shift2 is even.
        let mut s = 0.0;
        for (k, ck) in coeffs.iter().enumerate() {
            let offset2 = 2 * k as isize - j as isize + shift2;
            let idx = c as isize + offset2 * m as isize / 2;
            let sign = if (j - k).is_multiple_of(2) { 1.0 } else { -1.0 };
            s += sign * ck * samples[idx as usize];
        }
        s
    };
    if j.is_multiple_of(2) {
        delta(0) / hm.powi(j as i32)
    } else {
        0.5 * (delta(-1) + delta(1)) / hm.powi(j as i32)
    }
}

/// Detailed probe of uniformly spaced samples.
pub fn smoothness_probe_report(samples: &[f64], spacing: f64, order: usize, tol: f64) -> Result<ProbeOutcome> {
    let n = samples.len();
    if order == 0 {
        return Err(HolabError::Input("probe order must be at least 1".into()));
    }
    if n < 2 * order + 2 {
        return Err(HolabError::Input(format!(
            "smoothness probe of order {order} needs at least {} samples, got {n}",
            2 * order + 2
        )));
    }
    if !(spacing > 0.0 && spacing.is_finite()) {
        return Err(HolabError::Input(format!("invalid sample spacing {spacing}")));
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Ok(ProbeOutcome {
            smooth: false,
            failed_order: Some(0),
            e1: f64::INFINITY,
            e2: f64::INFINITY,
            levels: 0,
        });
    }
    let fmax = samples.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let mut worst = ProbeOutcome {
        smooth: true,
        failed_order: None,
        e1: 0.0,
        e2: 0.0,
        levels: 3,
    };
    for j in 1..=order {
        let levels = [1usize, 2, 4]
            .iter()
            .take_while(|&&m| 2 * half_width(j, m) < n)
            .count();
        worst.levels = worst.levels.min(levels);
        let top = [1usize, 2, 4][levels.max(1) - 1];
        let r = half_width(j, top);
        let centers = r..n - r;
        let mut dmax = 0.0_f64;
        let (mut e1, mut e2) = (0.0_f64, 0.0_f64);
        for c in centers {
            let d1 = central(samples, c, j, 1, spacing);
            dmax = dmax.max(d1.abs());
            if !d1.is_finite() {
                return Ok(ProbeOutcome {
                    smooth: false,
                    failed_order: Some(j),
                    e1: f64::INFINITY,
                    e2: f64::INFINITY,
                    levels,
                });
            }
            if levels >= 2 {
                let d2 = central(samples, c, j, 2, spacing);
                e1 = e1.max((d1 - d2).abs());
                if levels >= 3 {
                    let d4 = central(samples, c, j, 4, spacing);
                    e2 = e2.max((d2 - d4).abs());
                }
            }
        }
        let noise = ROUNDOFF_SAFETY * f64::EPSILON * 2f64.powi(j as i32) * fmax / spacing.powi(j as i32);
        let floor = tol * (1.0 + dmax) + noise;
        let ok = match levels {
            0 | 1 => true,
            2 => e1 <= floor,
            _ => e1 <= floor || e2 >= CONTRACTION_MIN * e1,
        };
        if worst.failed_order.is_none() {
            worst.e1 = e1;
            worst.e2 = e2;
        }
        if !ok && worst.failed_order.is_none() {
            worst.smooth = false;
            worst.failed_order = Some(j);
            worst.e1 = e1;
            worst.e2 = e2;
        }
    }
    Ok(worst)
}

/// Heuristic semi-decision: `true` when all derivatives up to `order`
/// look bounded and refine consistently on the sample grid.
pub fn smoothness_probe(samples: &[f64], spacing: f64, order: usize, tol: f64) -> Result<bool> {
    smoothness_probe_report(samples, spacing, order, tol).map(|o| o.smooth)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> (Vec<f64>, f64) {
        let h = (b - a) / (n - 1) as f64;
        ((0..n).map(|i| f(a + h * i as f64)).collect(), h)
    }

    #[test]
    fn stencils_are_exact_on_polynomials() {
        let (s, h) = grid(|t| t.powi(5), -1.0, 1.0, 65);
        let c = 40;
        let t = -1.0 + h * c as f64;
        for (j, exact) in [(1, 5.0 * t.powi(4)), (2, 20.0 * t.powi(3)), (3, 60.0 * t * t)] {
            for m in [1, 2] {
                let d = central(&s, c, j, m, h);
                let hm = h * m as f64;
                // leading truncation term is j/24·(hm)²·f^(j+2) (+1/8 for odd j at m=1)
                assert!((d - exact).abs() < 50.0 * hm * hm, "j={j} m={m}: {d} vs {exact}");
            }
        }
        let d4 = central(&s, c, 4, 1, h);
        assert!((d4 - 120.0 * t).abs() < 1e-6);
    }

    #[test]
    fn sine_is_smooth_to_fourth_order() {
        let (s, h) = grid(f64::sin, -3.0, 3.0, 257);
        assert!(smoothness_probe(&s, h, 4, DEFAULT_PROBE_TOL).unwrap());
    }

    #[test]
    fn absolute_value_fails_at_second_order() {
        let (s, h) = grid(f64::abs, -1.0, 1.0, 257);
        let out = smoothness_probe_report(&s, h, 2, DEFAULT_PROBE_TOL).unwrap();
        assert!(!out.smooth);
        assert_eq!(out.failed_order, Some(1));
    }

    #[test]
    fn cubic_ramp_is_c2_but_not_c4() {
        let ramp = |t: f64| t.max(0.0).powi(3);
        let (s, h) = grid(ramp, -1.0, 1.0, 257);
        assert!(smoothness_probe(&s, h, 2, DEFAULT_PROBE_TOL).unwrap());
        assert!(!smoothness_probe(&s, h, 4, DEFAULT_PROBE_TOL).unwrap());
    }

    #[test]
    fn too_few_samples_is_an_input_error() {
        let (s, h) = grid(f64::sin, 0.0, 1.0, 5);
        assert!(matches!(smoothness_probe(&s, h, 2, 1e-6), Err(HolabError::Input(_))));
        assert!(smoothness_probe(&s[..], h, 1, 1e-6).is_ok());
    }

    #[test]
    fn minimal_sample_counts_are_accepted() {
        for k in 1..=4 {
            let (s, h) = grid(|t| (2.0 * t).cos(), 0.0, 0.5, 2 * k + 2);
            assert!(smoothness_probe(&s, h, k, 1e-6).is_ok());
        }
    }
}
