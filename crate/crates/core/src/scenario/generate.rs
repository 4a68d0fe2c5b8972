use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Scenario;
use crate::bundle::SmoothPath;
use crate::curvature::{sample_curvature_along_horizontal, CurvatureSample, SignConvention, VectorField};
use crate::error::{HolabError, Result};
use crate::holonomy::{fiber_sample, AxiomCase, Loop};
use crate::liealg::GroupElement;

pub const FOURIER_HARMONICS: usize = 3;
pub const FIBER_STARTS_PER_CASE: usize = 5;

/// Grid used to measure the extent of a generated curve.
const EXTENT_SAMPLES: usize = 256;

/// `x₀ + Σ_k (a_k u_k(t) + b_k v_k(t)) / k` per coordinate, rescaled so the
/// largest excursion from `x₀` is `size`.
fn fourier_curve(
    label: String,
    x0: &[f64],
    size: f64,
    rng: &mut ChaCha8Rng,
    basis: fn(usize, f64) -> (f64, f64, f64, f64),
) -> SmoothPath {
    let d = x0.len();
    let coeffs: Vec<Vec<(f64, f64)>> = (0..d)
        .map(|_| {
            (1..=FOURIER_HARMONICS)
                .map(|k| {
                    let k = k as f64;
                    (rng.random_range(-1.0..1.0) / k, rng.random_range(-1.0..1.0) / k)
                })
                .collect()
        })
        .collect();
    let raw = |c: &[(f64, f64)], t: f64| -> f64 {
        c.iter()
            .enumerate()
            .map(|(k, (a, b))| {
                let (u, v, _, _) = basis(k + 1, t);
                a * u + b * v
            })
            .sum()
    };
    let extent = (0..=EXTENT_SAMPLES)
        .map(|i| {
            let t = i as f64 / EXTENT_SAMPLES as f64;
            coeffs.iter().map(|c| raw(c, t).abs()).fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
        .max(1e-12);
    let scale = size / extent;
    let c1 = Arc::new(coeffs);
    let c3 = c1.clone();
    let p1 = x0.to_vec();
    SmoothPath::from_fn(label, d, move |t| {
        c1.iter()
            .zip(&p1)
            .map(|(c, x)| {
                x + scale
                    * c.iter()
                        .enumerate()
                        .map(|(k, (a, b))| {
                            let (u, v, _, _) = basis(k + 1, t);
                            a * u + b * v
                        })
                        .sum::<f64>()
            })
            .collect()
    })
    .with_derivative(Arc::new(move |t| {
        c3.iter()
            .map(|c| {
                scale
                    * c.iter()
                        .enumerate()
                        .map(|(k, (a, b))| {
                            let (_, _, du, dv) = basis(k + 1, t);
                            a * du + b * dv
                        })
                        .sum::<f64>()
            })
            .collect()
    }))
}

/// `(cos 2πkt − 1, sin 2πkt)` and derivatives: closes at `t = 1`.
fn closed_basis(k: usize, t: f64) -> (f64, f64, f64, f64) {
    let w = TAU * k as f64;
    let (s, c) = (w * t).sin_cos();
    (c - 1.0, s, -w * s, w * c)
}

/// `(1 − cos(kπt/2), sin(kπt/2))` and derivatives: starts at `x₀`, open.
fn open_basis(k: usize, t: f64) -> (f64, f64, f64, f64) {
    let w = 0.5 * PI * k as f64;
    let (s, c) = (w * t).sin_cos();
    (1.0 - c, s, w * s, w * c)
}

/// Seeded Fourier loops at the scenario basepoint, of size between 40% and
/// 100% of the loop radius, re-timed to be stationary at the ends.
pub fn random_loops(scenario: &Scenario, count: usize, seed: u64) -> Result<Vec<Loop>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let size = scenario.loop_radius * rng.random_range(0.4..1.0);
            let id = format!("fourier-{seed}-{i}");
            let path = fourier_curve(id.clone(), &scenario.basepoint, size, &mut rng, closed_basis).retimed();
            Loop::new(id, path)
        })
        .collect()
}

/// Seeded open Fourier arc from `x0` with largest excursion `size`.
pub fn random_arc(label: impl Into<String>, x0: &[f64], size: f64, rng: &mut ChaCha8Rng) -> SmoothPath {
    fourier_curve(label.into(), x0, size, rng, open_basis)
}

/// Axiom-suite cases: an arc from the basepoint, a continuation from its
/// end, a loop, a start fiber and further fiber starts.
pub fn axiom_cases(scenario: &Scenario, count: usize, seed: u64) -> Result<Vec<AxiomCase>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tag = scenario.connection.tag();
    let loops = random_loops(scenario, count, seed ^ LOOP_SEED_SALT)?;
    let r = 0.5 * scenario.loop_radius;
    loops
        .into_iter()
        .enumerate()
        .map(|(i, cycle)| {
            let path = random_arc(format!("arc-{i}"), &scenario.basepoint, r * rng.random_range(0.4..1.0), &mut rng);
            let end = path.end();
            let continuation = random_arc(format!("cont-{i}"), &end, r * rng.random_range(0.4..1.0), &mut rng);
            let mut fibers = fiber_sample(tag, FIBER_STARTS_PER_CASE + 1, rng.random())?;
            let start = fibers.remove(0);
            Ok(AxiomCase {
                label: format!("case-{i}"),
                path,
                continuation,
                cycle,
                start,
                fiber_starts: fibers,
                reparam_strength: rng.random_range(-0.8..0.8),
            })
        })
        .collect()
}

/// Separates the loop stream from the arc and fiber stream of a seed.
const LOOP_SEED_SALT: u64 = 0x5eed_100b;

/// Smooth open path used for convergence studies:
/// `m + R/2 (sin(2.7t + 0.3) − sin 0.3, cos(3.1t + 0.5) − cos 0.5 + 0.2t)`.
pub fn convergence_path(scenario: &Scenario) -> Result<SmoothPath> {
    if scenario.chart.dim() != 2 {
        return Err(HolabError::Input("convergence path is defined on 2-dimensional charts".into()));
    }
    let (m, half) = (scenario.basepoint.clone(), 0.5 * scenario.loop_radius);
    Ok(SmoothPath::from_fn("convergence", 2, move |t| {
        vec![
            m[0] + half * ((2.7 * t + 0.3).sin() - 0.3_f64.sin()),
            m[1] + half * ((3.1 * t + 0.5).cos() - 0.5_f64.cos() + 0.2 * t),
        ]
    })
    .with_derivative(Arc::new(move |t| {
        vec![half * 2.7 * (2.7 * t + 0.3).cos(), half * (-3.1 * (3.1 * t + 0.5).sin() + 0.2)]
    })))
}

/// Path times at which curvature is sampled along a lifted arc.
pub const BUNDLE_SAMPLE_TIMES: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

/// Curvature on every coordinate pair at points of the holonomy bundle
/// through the identity: along horizontal lifts of `count` seeded arcs from
/// the basepoint, of size up to the loop radius.
pub fn holonomy_bundle_samples(
    scenario: &Scenario,
    count: usize,
    seed: u64,
    steps: usize,
    convention: SignConvention,
) -> Result<Vec<CurvatureSample>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let family: Vec<(f64, SmoothPath)> = (0..count)
        .map(|i| {
            let size = scenario.loop_radius * rng.random_range(0.2..1.0);
            (i as f64, random_arc(format!("sample-arc-{i}"), &scenario.basepoint, size, &mut rng))
        })
        .collect();
    let d = scenario.chart.dim();
    let unit = |k: usize| -> VectorField {
        Arc::new(move |_: &[f64]| {
            let mut e = vec![0.0; d];
            e[k] = 1.0;
            e
        })
    };
    let start = GroupElement::identity(scenario.connection.tag());
    let mut out = Vec::new();
    for i in 0..d {
        for j in i + 1..d {
            out.extend(sample_curvature_along_horizontal(
                &scenario.connection,
                &family,
                &unit(i),
                &unit(j),
                &BUNDLE_SAMPLE_TIMES,
                &start,
                steps,
                convention,
            )?);
        }
    }
    Ok(out)
}

/// The basepoint and the four points `basepoint ± r/2` on the coordinate
/// diagonals of the first two axes, `r` the loop radius.
pub fn probe_points(scenario: &Scenario) -> Vec<Vec<f64>> {
    let mut out = vec![scenario.basepoint.clone()];
    if scenario.chart.dim() < 2 {
        return out;
    }
    let r = 0.5 * scenario.loop_radius;
    for (a, b) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
        let mut p = scenario.basepoint.clone();
        p[0] += a * r;
        p[1] += b * r;
        out.push(p);
    }
    out
}
