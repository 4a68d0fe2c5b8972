use std::sync::Arc;

use serde::Serialize;

use super::froelicher::{froelicher_generate, ScalarFn};
use super::plot::{MapFn, OpenBox, Plot};
use super::space::{is_plot, product_diffeology, pushforward, Diffeology, Generator};
use crate::error::Result;

/// Probe budget used by the family checks.
pub const FAMILY_PROBE_BUDGET: usize = 8;

/// A curve `(-1, 1) → ℝ²` with its known smoothness.
#[derive(Clone, Debug)]
pub struct FamilyCandidate {
    pub plot: Plot,
    pub smooth: bool,
}

fn curve(label: String, smooth: bool, f: impl Fn(f64) -> [f64; 2] + Send + Sync + 'static) -> FamilyCandidate {
    let domain = OpenBox::new(vec![-1.0], vec![1.0]).expect("non-empty interval");
    FamilyCandidate {
        plot: Plot::from_fn(label, domain, 2, move |u| f(u[0]).to_vec()),
        smooth,
    }
}

/// Fixed family of 55 curves: polynomials, trigonometric curves, circle
/// reparametrizations, exponentials and curves with a kink `|t − c|`.
pub fn candidate_family() -> Vec<FamilyCandidate> {
    let mut out = Vec::new();
    for k in 0..20 {
        let (a, b) = (0.3 * (k % 5) as f64 - 0.6, 0.2 * (k / 5) as f64 - 0.3);
        let deg = 1 + k % 4;
        out.push(curve(format!("poly-{k}"), true, move |t| {
            [a + t.powi(deg) - b * t, b + a * t * t + 0.5 * t.powi(deg + 1)]
        }));
    }
    for k in 0..10 {
        let w = 0.5 + 0.4 * k as f64;
        let p = 0.3 * k as f64;
        out.push(curve(format!("trig-{k}"), true, move |t| [(w * t + p).sin(), (0.7 * w * t).cos() * t]));
    }
    for k in 0..10 {
        let (a, b) = (0.2 + 0.15 * k as f64, 0.1 * k as f64 - 0.5);
        out.push(curve(format!("circle-{k}"), true, move |t| {
            let s = a * t * t * t + t + b;
            [s.cos(), s.sin()]
        }));
    }
    for k in 0..5 {
        let r = 0.3 + 0.3 * k as f64;
        out.push(curve(format!("exp-{k}"), true, move |t| [(r * t).exp(), (-r * t * t).exp()]));
    }
    for k in 0..10 {
        let c = -0.45 + 0.1 * k as f64;
        out.push(curve(format!("kink-{k}"), false, move |t| [(t - c).abs(), 0.3 * t]));
    }
    out
}

/// Outcome of one family property over the whole family.
#[derive(Clone, Debug, Serialize)]
pub struct PropertyOutcome {
    pub name: String,
    pub checked: usize,
    pub failures: Vec<String>,
}

impl PropertyOutcome {
    fn new(name: &str) -> Self {
        PropertyOutcome {
            name: name.into(),
            checked: 0,
            failures: Vec::new(),
        }
    }

    fn record(&mut self, ok: bool, label: &str) {
        self.checked += 1;
        if !ok {
            self.failures.push(label.to_string());
        }
    }

    pub fn passed(&self) -> bool {
        self.checked > 0 && self.failures.is_empty()
    }
}

fn accepted(c: &Plot, d: &Diffeology) -> Result<bool> {
    Ok(is_plot(c, d, FAMILY_PROBE_BUDGET)?.is_accepted())
}

fn map2(f: impl Fn(f64, f64) -> [f64; 2] + Send + Sync + 'static) -> MapFn {
    Arc::new(move |x: &[f64]| f(x[0], x[1]).to_vec())
}

/// Runs the structural properties of the diffeology layer over the
/// family: membership in the standard structure matches smoothness,
/// monotonicity under added generators, product acceptance as the
/// conjunction of the projections, push-forward composition, and every
/// generating function of a Frölicher structure passing its own
/// function test.
pub fn check_family_properties(family: &[FamilyCandidate]) -> Result<Vec<PropertyOutcome>> {
    let r2 = Diffeology::standard(2);
    let r1 = Diffeology::standard(1);
    let whole = OpenBox::new(vec![-10.0], vec![10.0])?;
    let circle = Plot::from_fn("circle", whole.clone(), 2, |u| vec![u[0].cos(), u[0].sin()]);
    let line = Plot::from_fn("diagonal", whole, 2, |u| vec![u[0], -0.5 * u[0]]);
    let d1 = Diffeology::generated(2, vec![circle])?;
    let d2 = d1.clone().with_generator(Generator::new(line))?;
    let product = product_diffeology(&r1, &r1);

    let f = map2(|x, y| [x + y * y, y]);
    let g = map2(|x, y| [x.sin(), x * y]);
    let (f1, g1) = (f.clone(), g.clone());
    let gf: MapFn = Arc::new(move |x: &[f64]| g1(&f1(x)));
    let nested = pushforward(&pushforward(&d1, "f", f.clone(), 2), "g", g.clone(), 2);
    let direct = pushforward(&d1, "g∘f", gf.clone(), 2);

    let mut standard = PropertyOutcome::new("standard_membership_matches_smoothness");
    let mut monotone = PropertyOutcome::new("membership_monotonicity");
    let mut conj = PropertyOutcome::new("product_conjunction");
    let mut comp = PropertyOutcome::new("pushforward_composition");
    for c in family {
        let p = &c.plot;
        standard.record(accepted(p, &r2)? == c.smooth, p.label());
        monotone.record(!accepted(p, &d1)? || accepted(p, &d2)?, p.label());
        let both = accepted(&p.components(0..1), &r1)? && accepted(&p.components(1..2), &r1)?;
        conj.record(accepted(p, &product)? == both, p.label());
        let pushed = p.postcompose("g∘f", gf.clone(), 2);
        for q in [p, &pushed] {
            comp.record(accepted(q, &nested)? == accepted(q, &direct)?, q.label());
        }
    }

    let gens: Vec<(String, ScalarFn)> = vec![
        ("x".into(), Arc::new(|x: &[f64]| x[0])),
        ("y".into(), Arc::new(|x: &[f64]| x[1])),
        ("r2".into(), Arc::new(|x: &[f64]| x[0] * x[0] + x[1] * x[1])),
        ("sin_xy".into(), Arc::new(|x: &[f64]| (x[0] * x[1]).sin())),
    ];
    let fro = froelicher_generate(2, gens)?;
    let mut own = PropertyOutcome::new("generating_functions_are_functions");
    for (label, h) in fro.functions() {
        own.record(fro.function_test(h)?, label);
    }
    Ok(vec![standard, monotone, conj, comp, own])
}
