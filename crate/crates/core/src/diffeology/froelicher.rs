use std::sync::Arc;

use super::plot::{sample_lines, OpenBox, Plot};
use super::probe::{smoothness_probe_report, ProbeConfig};
use crate::error::{HolabError, Result};

pub type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A sampled curve, uniform in its parameter.
#[derive(Clone, Debug)]
pub struct Contour {
    pub label: String,
    pub spacing: f64,
    pub points: Vec<Vec<f64>>,
}

/// Frölicher structure generated by a family of scalar maps.
///
/// Contours are the curves along which every generating function is
/// smooth; functions are the maps that are smooth along every stored
/// witness contour. Witnesses are lines and (in dimension 2) level-set
/// curves of the generators, kept only when they pass the contour test,
/// so each generating function passes the function test by construction.
#[derive(Clone)]
pub struct FroelicherStructure {
    space_dim: usize,
    functions: Vec<(String, ScalarFn)>,
    witnesses: Vec<Contour>,
    probe: ProbeConfig,
}

pub fn froelicher_generate(space_dim: usize, functions: Vec<(String, ScalarFn)>) -> Result<FroelicherStructure> {
    let region = OpenBox::cube(space_dim, -1.0, 1.0)?;
    froelicher_generate_in(space_dim, functions, &region, ProbeConfig::default())
}

pub fn froelicher_generate_in(
    space_dim: usize,
    functions: Vec<(String, ScalarFn)>,
    region: &OpenBox,
    probe: ProbeConfig,
) -> Result<FroelicherStructure> {
    if region.dim() != space_dim {
        return Err(HolabError::Shape("witness region dimension".into()));
    }
    let mut s = FroelicherStructure {
        space_dim,
        functions,
        witnesses: Vec::new(),
        probe,
    };
    let mut candidates = line_witnesses(region, probe.points);
    if space_dim == 2 {
        for (label, f) in &s.functions {
            candidates.extend(level_set_witnesses(label, f, region, probe.points));
        }
    }
    for c in candidates {
        if s.contour_samples_ok(&c)? {
            s.witnesses.push(c);
        }
    }
    Ok(s)
}

impl FroelicherStructure {
    pub fn space_dim(&self) -> usize {
        self.space_dim
    }

    pub fn functions(&self) -> &[(String, ScalarFn)] {
        &self.functions
    }

    pub fn witnesses(&self) -> &[Contour] {
        &self.witnesses
    }

    fn contour_samples_ok(&self, c: &Contour) -> Result<bool> {
        for (_, f) in &self.functions {
            let samples: Vec<f64> = c.points.iter().map(|x| f(x)).collect();
            if !smoothness_probe_report(&samples, c.spacing, self.probe.order, self.probe.tol)?.smooth {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// `c` is a contour iff `f ∘ c` passes the probe for every generator `f`.
    pub fn contour_test(&self, c: &Plot) -> Result<bool> {
        if c.source_dim() != 1 || c.target_dim() != self.space_dim {
            return Err(HolabError::Shape(format!(
                "contour must map ℝ → ℝ^{}, got ℝ^{} → ℝ^{}",
                self.space_dim,
                c.source_dim(),
                c.target_dim()
            )));
        }
        let line = sample_lines(c.domain(), self.probe.points).remove(0);
        let contour = Contour {
            label: c.label().to_string(),
            spacing: line.spacing,
            points: line.points.iter().map(|u| c.eval(u)).collect(),
        };
        self.contour_samples_ok(&contour)
    }

    /// `h` is a function iff `h ∘ c` passes the probe on every witness.
    pub fn function_test(&self, h: &ScalarFn) -> Result<bool> {
        for c in &self.witnesses {
            let samples: Vec<f64> = c.points.iter().map(|x| h(x)).collect();
            if !smoothness_probe_report(&samples, c.spacing, self.probe.order, self.probe.tol)?.smooth {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

fn line_witnesses(region: &OpenBox, n: usize) -> Vec<Contour> {
    let d = region.dim();
    let mut out: Vec<Contour> = sample_lines(region, n)
        .into_iter()
        .enumerate()
        .map(|(i, l)| Contour {
            label: format!("line-{i}"),
            spacing: l.spacing,
            points: l.points,
        })
        .collect();
    if d >= 2 {
        let lo: Vec<f64> = (0..d).map(|k| region.sample_interval(k).0).collect();
        let hi: Vec<f64> = (0..d).map(|k| region.sample_interval(k).1).collect();
        let spacing = 1.0 / (n - 1) as f64;
        let points = (0..n)
            .map(|i| {
                let s = 0.05 + 0.9 * i as f64 * spacing;
                (0..d).map(|k| lo[k] + s * (hi[k] - lo[k])).collect()
            })
            .collect();
        out.push(Contour {
            label: "diagonal".into(),
            spacing: 0.9 * spacing,
            points,
        });
    }
    out
}

/// Unit-speed level-set curves of `f` in the plane, by RK4 along `J∇f/|∇f|`.
fn level_set_witnesses(label: &str, f: &ScalarFn, region: &OpenBox, n: usize) -> Vec<Contour> {
    let (a0, b0) = region.sample_interval(0);
    let (a1, b1) = region.sample_interval(1);
    let h = 1e-3 * region.scale();
    let field = |x: &[f64]| -> Option<[f64; 2]> {
        let d = |k: usize| {
            let at = |s: f64| {
                let mut y = x.to_vec();
                y[k] += s * h;
                f(&y)
            };
            (-at(2.0) + 8.0 * at(1.0) - 8.0 * at(-1.0) + at(-2.0)) / (12.0 * h)
        };
        let (gx, gy) = (d(0), d(1));
        let norm = gx.hypot(gy);
        (norm > 1e-6 && norm.is_finite()).then_some([-gy / norm, gx / norm])
    };
    let length = 0.5 * (b0 - a0).min(b1 - a1);
    let spacing = length / (n - 1) as f64;
    let substeps = 16;
    let dt = spacing / substeps as f64;
    let starts = [
        [0.5 * (a0 + b0), 0.5 * (a1 + b1)],
        [a0 + 0.3 * (b0 - a0), a1 + 0.6 * (b1 - a1)],
        [a0 + 0.7 * (b0 - a0), a1 + 0.35 * (b1 - a1)],
    ];
    let mut out = Vec::new();
    'start: for (si, start) in starts.iter().enumerate() {
        let mut x = start.to_vec();
        let mut points = vec![x.clone()];
        for _ in 1..n {
            for _ in 0..substeps {
                let k1 = match field(&x) {
                    Some(k) => k,
                    None => continue 'start,
                };
                let y2 = [x[0] + 0.5 * dt * k1[0], x[1] + 0.5 * dt * k1[1]];
                let Some(k2) = field(&y2) else { continue 'start };
                let y3 = [x[0] + 0.5 * dt * k2[0], x[1] + 0.5 * dt * k2[1]];
                let Some(k3) = field(&y3) else { continue 'start };
                let y4 = [x[0] + dt * k3[0], x[1] + dt * k3[1]];
                let Some(k4) = field(&y4) else { continue 'start };
                for k in 0..2 {
                    x[k] += dt / 6.0 * (k1[k] + 2.0 * k2[k] + 2.0 * k3[k] + k4[k]);
                }
            }
            points.push(x.clone());
        }
        out.push(Contour {
            label: format!("level-{label}-{si}"),
            spacing,
            points,
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coords() -> Vec<(String, ScalarFn)> {
        vec![
            ("x".into(), Arc::new(|p: &[f64]| p[0]) as ScalarFn),
            ("y".into(), Arc::new(|p: &[f64]| p[1]) as ScalarFn),
        ]
    }

    fn curve(f: impl Fn(f64) -> Vec<f64> + Send + Sync + 'static) -> Plot {
        Plot::from_fn("c", OpenBox::new(vec![-1.0], vec![1.0]).unwrap(), 2, move |u| f(u[0]))
    }

    #[test]
    fn lines_are_contours_of_the_coordinates() {
        let s = froelicher_generate(2, coords()).unwrap();
        assert!(s.contour_test(&curve(|t| vec![0.3 * t - 0.1, 2.0 * t])).unwrap());
    }

    #[test]
    fn kinked_curve_is_not_a_contour() {
        let s = froelicher_generate(2, coords()).unwrap();
        assert!(!s.contour_test(&curve(|t| vec![t.abs(), 0.0])).unwrap());
    }

    #[test]
    fn circle_is_a_contour_of_the_radius_squared() {
        let r2: ScalarFn = Arc::new(|p: &[f64]| p[0] * p[0] + p[1] * p[1]);
        let s = froelicher_generate(2, vec![("r2".into(), r2)]).unwrap();
        let kinked_circle = curve(|t| vec![(3.0 * t.abs()).cos(), (3.0 * t.abs()).sin()]);
        // The composite with r² is constant, whatever the parametrization does.
        assert!(s.contour_test(&kinked_circle).unwrap());
    }

    #[test]
    fn generators_are_functions() {
        let r2: ScalarFn = Arc::new(|p: &[f64]| p[0] * p[0] + p[1] * p[1]);
        let fs = vec![("r2".to_string(), r2), ("sx".to_string(), Arc::new(|p: &[f64]| p[0].sin()) as ScalarFn)];
        let s = froelicher_generate(2, fs).unwrap();
        assert!(s.witnesses().iter().any(|w| w.label.starts_with("level-r2")));
        for (_, f) in s.functions() {
            assert!(s.function_test(f).unwrap());
        }
    }
}
