use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::plot::{sample_lines, MapFn, OpenBox, Plot, SampleLine};
use super::probe::{smoothness_probe_report, ProbeConfig, ProbeOutcome};
use crate::error::{HolabError, Result};

pub type Predicate = Arc<dyn Fn(&[f64]) -> bool + Send + Sync>;

/// A generating plot, optionally with a known local inverse on its image.
#[derive(Clone, Debug)]
pub struct Generator {
    pub plot: Plot,
    pub local_inverse: Option<MapFnDebug>,
}

/// [`MapFn`] with a placeholder `Debug`.
#[derive(Clone)]
pub struct MapFnDebug(pub MapFn);

impl fmt::Debug for MapFnDebug {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("<map>")
    }
}

impl Generator {
    pub fn new(plot: Plot) -> Self {
        Self {
            plot,
            local_inverse: None,
        }
    }

    pub fn with_inverse(plot: Plot, inverse: MapFn) -> Self {
        Self {
            plot,
            local_inverse: Some(MapFnDebug(inverse)),
        }
    }
}

/// Which plot axioms membership applies lazily. Constants and the chain
/// rule are always on; gluing needs an explicit cover.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ClosurePolicy {
    pub constants: bool,
    pub chain_rule: bool,
    pub gluing: bool,
    pub probe: ProbeConfig,
}

impl Default for ClosurePolicy {
    fn default() -> Self {
        Self {
            constants: true,
            chain_rule: true,
            gluing: true,
            probe: ProbeConfig::default(),
        }
    }
}

#[derive(Clone)]
pub enum Diffeology {
    Generated {
        generators: Vec<Generator>,
        space_dim: usize,
        policy: ClosurePolicy,
    },
    Product {
        left: Box<Diffeology>,
        right: Box<Diffeology>,
    },
    Trace {
        parent: Box<Diffeology>,
        predicate: Predicate,
        label: String,
    },
    Pushforward {
        parent: Box<Diffeology>,
        map: MapFn,
        space_dim: usize,
        label: String,
    },
    ProjectiveLimit {
        factors: Vec<Diffeology>,
        projections: Vec<MapFn>,
        space_dim: usize,
    },
}

impl fmt::Debug for Diffeology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diffeology::Generated {
                generators, space_dim, ..
            } => {
                let labels: Vec<_> = generators.iter().map(|g| g.plot.label()).collect();
                write!(f, "Generated(ℝ^{space_dim}, {labels:?})")
            }
            Diffeology::Product { left, right } => write!(f, "Product({left:?}, {right:?})"),
            Diffeology::Trace { parent, label, .. } => write!(f, "Trace({label}, {parent:?})"),
            Diffeology::Pushforward { parent, label, .. } => write!(f, "Pushforward({label}, {parent:?})"),
            Diffeology::ProjectiveLimit { factors, .. } => write!(f, "ProjectiveLimit({factors:?})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum TestMapSource {
    Hint(usize),
    Identity,
    LocalInverse,
    Reconstructed,
}

/// Construction that certifies an accepted candidate.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Witness {
    Constant,
    Generator {
        index: usize,
        label: String,
        source: TestMapSource,
        match_residual: f64,
    },
    Product(Box<Witness>, Box<Witness>),
    Trace(Box<Witness>),
    Pushforward {
        lift: TestMapSource,
        inner: Box<Witness>,
    },
    Limit(Vec<Witness>),
    Glued(Vec<Witness>),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Rejection {
    pub reason: String,
    pub failed_probe: Option<ProbeOutcome>,
    pub attempts: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Membership {
    Accepted(Witness),
    Rejected(Rejection),
}

impl Membership {
    pub fn is_accepted(&self) -> bool {
        matches!(self, Membership::Accepted(_))
    }

    pub fn witness(&self) -> Option<&Witness> {
        match self {
            Membership::Accepted(w) => Some(w),
            Membership::Rejected(_) => None,
        }
    }

    pub fn rejection(&self) -> Option<&Rejection> {
        match self {
            Membership::Accepted(_) => None,
            Membership::Rejected(r) => Some(r),
        }
    }

    fn reject(reason: impl Into<String>, failed_probe: Option<ProbeOutcome>, attempts: usize) -> Self {
        Membership::Rejected(Rejection {
            reason: reason.into(),
            failed_probe,
            attempts,
        })
    }
}

impl Diffeology {
    /// Diffeology of `ℝ^space_dim` generated by `plots`.
    pub fn generated(space_dim: usize, plots: Vec<Plot>) -> Result<Self> {
        Self::generated_with(space_dim, plots.into_iter().map(Generator::new).collect())
    }

    pub fn generated_with(space_dim: usize, generators: Vec<Generator>) -> Result<Self> {
        if let Some(g) = generators.iter().find(|g| g.plot.target_dim() != space_dim) {
            return Err(HolabError::Shape(format!(
                "generator '{}' maps into ℝ^{}, expected ℝ^{space_dim}",
                g.plot.label(),
                g.plot.target_dim()
            )));
        }
        Ok(Diffeology::Generated {
            generators,
            space_dim,
            policy: ClosurePolicy::default(),
        })
    }

    /// Smooth maps into `ℝ^d`, generated by the identity chart.
    pub fn standard(d: usize) -> Self {
        let id: MapFn = Arc::new(|x: &[f64]| x.to_vec());
        Diffeology::Generated {
            generators: vec![Generator::with_inverse(Plot::identity(OpenBox::whole(d)), id)],
            space_dim: d,
            policy: ClosurePolicy::default(),
        }
    }

    pub fn with_policy(mut self, new_policy: ClosurePolicy) -> Self {
        if let Diffeology::Generated { policy, .. } = &mut self {
            *policy = new_policy;
        }
        self
    }

    /// Adds a generator; only meaningful for generated diffeologies.
    pub fn with_generator(self, g: Generator) -> Result<Self> {
        match self {
            Diffeology::Generated {
                mut generators,
                space_dim,
                policy,
            } => {
                if g.plot.target_dim() != space_dim {
                    return Err(HolabError::Shape("generator target dimension mismatch".into()));
                }
                generators.push(g);
                Ok(Diffeology::Generated {
                    generators,
                    space_dim,
                    policy,
                })
            }
            _ => Err(HolabError::Input("generators can only be added to a generated diffeology".into())),
        }
    }

    pub fn space_dim(&self) -> usize {
        match self {
            Diffeology::Generated { space_dim, .. }
            | Diffeology::Pushforward { space_dim, .. }
            | Diffeology::ProjectiveLimit { space_dim, .. } => *space_dim,
            Diffeology::Product { left, right } => left.space_dim() + right.space_dim(),
            Diffeology::Trace { parent, .. } => parent.space_dim(),
        }
    }

    pub fn policy(&self) -> ClosurePolicy {
        match self {
            Diffeology::Generated { policy, .. } => *policy,
            Diffeology::Product { left, .. } => left.policy(),
            Diffeology::Trace { parent, .. } | Diffeology::Pushforward { parent, .. } => parent.policy(),
            Diffeology::ProjectiveLimit { factors, .. } => {
                factors.first().map(|f| f.policy()).unwrap_or_default()
            }
        }
    }

    /// Explicit generators where the construction has them: pairwise
    /// products for products, push-forwards for push-forwards.
    pub fn generators(&self) -> Option<Vec<Plot>> {
        match self {
            Diffeology::Generated { generators, .. } => Some(generators.iter().map(|g| g.plot.clone()).collect()),
            Diffeology::Product { left, right } => {
                let (l, r) = (left.generators()?, right.generators()?);
                let mut out = Vec::new();
                for a in &l {
                    for b in &r {
                        out.push(product_plot(a, b));
                    }
                }
                Some(out)
            }
            Diffeology::Pushforward {
                parent, map, space_dim, label,
            } => Some(
                parent
                    .generators()?
                    .iter()
                    .map(|g| g.postcompose(label, map.clone(), *space_dim))
                    .collect(),
            ),
            _ => None,
        }
    }
}

/// `(u, v) ↦ (a(u), b(v))` on the product box.
fn product_plot(a: &Plot, b: &Plot) -> Plot {
    let (pa, fa, fb) = (a.source_dim(), a.evaluator().clone(), b.evaluator().clone());
    let mut lo = a.domain().lo().to_vec();
    lo.extend_from_slice(b.domain().lo());
    let mut hi = a.domain().hi().to_vec();
    hi.extend_from_slice(b.domain().hi());
    let domain = OpenBox::new(lo, hi).expect("product of non-empty boxes");
    Plot::new(
        format!("{}×{}", a.label(), b.label()),
        domain,
        a.target_dim() + b.target_dim(),
        Arc::new(move |u: &[f64]| {
            let mut out = fa(&u[..pa]);
            out.extend(fb(&u[pa..]));
            out
        }),
    )
}

/// Push-forward along `f: ℝ^d → ℝ^k`. Generated diffeologies map to the
/// diffeology generated by `f ∘ generators`.
pub fn pushforward(diff: &Diffeology, label: &str, f: MapFn, target_dim: usize) -> Diffeology {
    match diff {
        Diffeology::Generated {
            generators, policy, ..
        } => Diffeology::Generated {
            generators: generators
                .iter()
                .map(|g| Generator::new(g.plot.postcompose(label, f.clone(), target_dim)))
                .collect(),
            space_dim: target_dim,
            policy: *policy,
        },
        other => Diffeology::Pushforward {
            parent: Box::new(other.clone()),
            map: f,
            space_dim: target_dim,
            label: label.to_string(),
        },
    }
}

pub fn product_diffeology(d1: &Diffeology, d2: &Diffeology) -> Diffeology {
    Diffeology::Product {
        left: Box::new(d1.clone()),
        right: Box::new(d2.clone()),
    }
}

pub fn trace_diffeology(diff: &Diffeology, label: &str, predicate: Predicate) -> Diffeology {
    Diffeology::Trace {
        parent: Box::new(diff.clone()),
        predicate,
        label: label.to_string(),
    }
}

/// Limit of `factors[0] ← factors[1] ← …` realized on a common model
/// space `ℝ^space_dim` with projections `p_i`. `connecting[i]` maps factor
/// `i + 1` to factor `i`; `p_i = connecting[i] ∘ p_{i+1}` is checked at
/// `check_points`.
pub fn projective_limit_diffeology(
    factors: Vec<Diffeology>,
    projections: Vec<MapFn>,
    connecting: &[MapFn],
    space_dim: usize,
    check_points: &[Vec<f64>],
) -> Result<Diffeology> {
    if factors.is_empty() || factors.len() != projections.len() {
        return Err(HolabError::Input("one projection per factor is required".into()));
    }
    if connecting.len() + 1 != factors.len() {
        return Err(HolabError::Input(format!(
            "{} factors need {} connecting maps, got {}",
            factors.len(),
            factors.len() - 1,
            connecting.len()
        )));
    }
    for x in check_points {
        if x.len() != space_dim {
            return Err(HolabError::Shape("check point dimension".into()));
        }
        for (i, f) in connecting.iter().enumerate() {
            let direct = projections[i](x);
            let via = f(&projections[i + 1](x));
            if direct.len() != via.len() {
                return Err(HolabError::Consistency(format!("connecting map {i} changes dimension")));
            }
            let gap = direct.iter().zip(&via).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            let scale = 1.0 + direct.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            if gap > 1e-9 * scale {
                return Err(HolabError::Consistency(format!(
                    "projection {i} differs from connecting map ∘ projection {} by {gap:.3e} at {x:?}",
                    i + 1
                )));
            }
        }
    }
    for (i, (fac, p)) in factors.iter().zip(&projections).enumerate() {
        if let Some(x) = check_points.first() {
            if p(x).len() != fac.space_dim() {
                return Err(HolabError::Shape(format!("projection {i} lands in the wrong dimension")));
            }
        }
    }
    Ok(Diffeology::ProjectiveLimit {
        factors,
        projections,
        space_dim,
    })
}

/// Membership semi-decision; see [`is_plot_with_hints`].
pub fn is_plot(candidate: &Plot, diff: &Diffeology, probe_budget: usize) -> Result<Membership> {
    is_plot_with_hints(candidate, diff, probe_budget, &[])
}

/// Decides membership of `candidate` on sample grids.
///
/// Accepts constants, and candidates equal on samples to a generator
/// precomposed with a test map that passes the smoothness probe. Test maps
/// are tried in the order: caller hints, the identity, the generator's
/// local inverse, and a Gauss–Newton reconstruction by continuation along
/// the sample lines; at most `probe_budget` are tried in total. Acceptance
/// is sound relative to the probe; rejection only means no witness was
/// found.
pub fn is_plot_with_hints(
    candidate: &Plot,
    diff: &Diffeology,
    probe_budget: usize,
    hints: &[Plot],
) -> Result<Membership> {
    if probe_budget == 0 {
        return Err(HolabError::Input("probe budget must be at least 1".into()));
    }
    if candidate.target_dim() != diff.space_dim() {
        return Err(HolabError::Shape(format!(
            "candidate '{}' maps into ℝ^{}, space is ℝ^{}",
            candidate.label(),
            candidate.target_dim(),
            diff.space_dim()
        )));
    }
    let policy = diff.policy();
    let lines = sample_lines(candidate.domain(), policy.probe.points);
    let values: Vec<Vec<Vec<f64>>> = lines
        .iter()
        .map(|l| l.points.iter().map(|u| candidate.eval(u)).collect())
        .collect();
    if values.iter().flatten().flatten().any(|v| !v.is_finite()) {
        return Ok(Membership::reject("candidate is not finite on the sample grid", None, 0));
    }
    if is_constant(&values) {
        return Ok(Membership::Accepted(Witness::Constant));
    }
    match diff {
        Diffeology::Generated {
            generators, policy, ..
        } => Ok(match_generators(&lines, &values, generators, policy, probe_budget, hints)),
        Diffeology::Product { left, right } => {
            let d1 = left.space_dim();
            let c1 = candidate.components(0..d1);
            let c2 = candidate.components(d1..candidate.target_dim());
            let m1 = is_plot_with_hints(&c1, left, probe_budget, hints)?;
            let m2 = is_plot_with_hints(&c2, right, probe_budget, hints)?;
            Ok(match (m1, m2) {
                (Membership::Accepted(a), Membership::Accepted(b)) => {
                    Membership::Accepted(Witness::Product(Box::new(a), Box::new(b)))
                }
                (Membership::Rejected(r), _) => Membership::reject(
                    format!("first projection rejected: {}", r.reason),
                    r.failed_probe,
                    r.attempts,
                ),
                (_, Membership::Rejected(r)) => Membership::reject(
                    format!("second projection rejected: {}", r.reason),
                    r.failed_probe,
                    r.attempts,
                ),
            })
        }
        Diffeology::Trace {
            parent, predicate, label,
        } => {
            if let Some(x) = values.iter().flatten().find(|x| !predicate(x)) {
                return Ok(Membership::reject(format!("image point {x:?} is outside '{label}'"), None, 0));
            }
            Ok(match is_plot_with_hints(candidate, parent, probe_budget, hints)? {
                Membership::Accepted(w) => Membership::Accepted(Witness::Trace(Box::new(w))),
                rejected => rejected,
            })
        }
        Diffeology::Pushforward {
            parent, map, label, ..
        } => pushforward_membership(candidate, parent, map, label, probe_budget, hints, &lines, &values),
        Diffeology::ProjectiveLimit {
            factors, projections, ..
        } => {
            let mut witnesses = Vec::with_capacity(factors.len());
            for (i, (fac, p)) in factors.iter().zip(projections).enumerate() {
                let ci = candidate.postcompose(&format!("p{i}"), p.clone(), fac.space_dim());
                match is_plot_with_hints(&ci, fac, probe_budget, hints)? {
                    Membership::Accepted(w) => witnesses.push(w),
                    Membership::Rejected(r) => {
                        return Ok(Membership::reject(
                            format!("factor {i} rejected: {}", r.reason),
                            r.failed_probe,
                            r.attempts,
                        ))
                    }
                }
            }
            Ok(Membership::Accepted(Witness::Limit(witnesses)))
        }
    }
}

/// Gluing: accepts when the boxes of `cover` cover the sample grid of the
/// candidate and every restriction is accepted.
pub fn is_plot_glued(candidate: &Plot, diff: &Diffeology, cover: &[OpenBox], probe_budget: usize) -> Result<Membership> {
    if !diff.policy().gluing {
        return Err(HolabError::Input("gluing is disabled by the closure policy".into()));
    }
    if cover.is_empty() {
        return Err(HolabError::Input("empty cover".into()));
    }
    for b in cover {
        if !candidate.domain().encloses(b) {
            return Err(HolabError::Domain("cover box leaves the candidate domain".into()));
        }
    }
    let lines = sample_lines(candidate.domain(), diff.policy().probe.points);
    if let Some(u) = lines
        .iter()
        .flat_map(|l| l.points.iter())
        .find(|u| !cover.iter().any(|b| b.contains(u)))
    {
        return Ok(Membership::reject(format!("sample {u:?} is not covered"), None, 0));
    }
    let mut witnesses = Vec::with_capacity(cover.len());
    for b in cover {
        let piece = candidate.restrict(b.clone())?;
        match is_plot(&piece, diff, probe_budget)? {
            Membership::Accepted(w) => witnesses.push(w),
            Membership::Rejected(r) => {
                return Ok(Membership::reject(
                    format!("restriction to {b:?} rejected: {}", r.reason),
                    r.failed_probe,
                    r.attempts,
                ))
            }
        }
    }
    Ok(Membership::Accepted(Witness::Glued(witnesses)))
}

fn is_constant(values: &[Vec<Vec<f64>>]) -> bool {
    let Some(first) = values.first().and_then(|l| l.first()) else {
        return true;
    };
    let scale = 1.0 + first.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    values
        .iter()
        .flatten()
        .all(|x| x.iter().zip(first).all(|(a, b)| (a - b).abs() <= 1e-12 * scale))
}

/// Outcome of checking one test map against one generator.
enum Assessment {
    Ok(f64),
    Fail(String, Option<ProbeOutcome>),
}

fn assess(
    lines: &[SampleLine],
    values: &[Vec<Vec<f64>>],
    phi: &[Vec<Vec<f64>>],
    gen: &Plot,
    policy: &ClosurePolicy,
) -> Assessment {
    let mut residual = 0.0_f64;
    let cmax = values
        .iter()
        .flatten()
        .flatten()
        .fold(0.0_f64, |m, v| m.max(v.abs()));
    for (line_phi, line_c) in phi.iter().zip(values) {
        for (y, c) in line_phi.iter().zip(line_c) {
            if !gen.domain().contains(y) {
                return Assessment::Fail(format!("test map leaves the domain of '{}'", gen.label()), None);
            }
            let g = gen.eval(y);
            let r = g.iter().zip(c).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            residual = residual.max(r);
        }
    }
    if !(residual <= 1e-9 * (1.0 + cmax)) {
        return Assessment::Fail(
            format!("generator '{}' does not reproduce the candidate ({residual:.3e})", gen.label()),
            None,
        );
    }
    if lines.len() == 1 && lines[0].points.len() == 1 {
        return Assessment::Ok(residual);
    }
    for (line, line_phi) in lines.iter().zip(phi) {
        for k in 0..gen.source_dim() {
            let samples: Vec<f64> = line_phi.iter().map(|y| y[k]).collect();
            match smoothness_probe_report(&samples, line.spacing, policy.probe.order, policy.probe.tol) {
                Ok(out) if out.smooth => {}
                Ok(out) => {
                    return Assessment::Fail(
                        format!(
                            "test map into '{}' fails the smoothness probe at order {}",
                            gen.label(),
                            out.failed_order.unwrap_or(0)
                        ),
                        Some(out),
                    )
                }
                Err(e) => return Assessment::Fail(e.to_string(), None),
            }
        }
    }
    Assessment::Ok(residual)
}

fn match_generators(
    lines: &[SampleLine],
    values: &[Vec<Vec<f64>>],
    generators: &[Generator],
    policy: &ClosurePolicy,
    budget: usize,
    hints: &[Plot],
) -> Membership {
    let mut attempts = 0;
    let mut last: Option<(String, Option<ProbeOutcome>)> = None;
    let p = lines.first().map(|l| l.points[0].len()).unwrap_or(0);
    for (index, gen) in generators.iter().enumerate() {
        let q = gen.plot.source_dim();
        let mut sources: Vec<TestMapSource> = hints
            .iter()
            .enumerate()
            .filter(|(_, h)| h.source_dim() == p && h.target_dim() == q)
            .map(|(i, _)| TestMapSource::Hint(i))
            .collect();
        if p == q {
            sources.push(TestMapSource::Identity);
        }
        if gen.local_inverse.is_some() {
            sources.push(TestMapSource::LocalInverse);
        }
        sources.push(TestMapSource::Reconstructed);
        for source in sources {
            if attempts == budget {
                let (reason, probe) = last.unwrap_or_else(|| ("probe budget exhausted".into(), None));
                return Membership::reject(format!("{reason} (budget exhausted)"), probe, attempts);
            }
            attempts += 1;
            let phi: Option<Vec<Vec<Vec<f64>>>> = match &source {
                TestMapSource::Hint(i) => Some(
                    lines
                        .iter()
                        .map(|l| l.points.iter().map(|u| hints[*i].eval(u)).collect())
                        .collect(),
                ),
                TestMapSource::Identity => Some(lines.iter().map(|l| l.points.clone()).collect()),
                TestMapSource::LocalInverse => {
                    let inv = &gen.local_inverse.as_ref().expect("checked").0;
                    Some(values.iter().map(|l| l.iter().map(|c| inv(c)).collect()).collect())
                }
                TestMapSource::Reconstructed => values
                    .iter()
                    .map(|l| reconstruct_line(&gen.plot, l))
                    .collect::<Option<Vec<_>>>(),
            };
            let Some(phi) = phi else {
                last = Some((format!("no preimage found under '{}'", gen.plot.label()), None));
                continue;
            };
            match assess(lines, values, &phi, &gen.plot, policy) {
                Assessment::Ok(match_residual) => {
                    return Membership::Accepted(Witness::Generator {
                        index,
                        label: gen.plot.label().to_string(),
                        source,
                        match_residual,
                    })
                }
                Assessment::Fail(reason, probe) => {
                    // Keep the most informative failure: a probe failure wins.
                    if probe.is_some() || last.as_ref().map(|l| l.1.is_none()).unwrap_or(true) {
                        last = Some((reason, probe));
                    }
                }
            }
        }
    }
    let (reason, probe) = last.unwrap_or_else(|| ("no generators".into(), None));
    Membership::reject(reason, probe, attempts)
}

/// Solves `gen(y) = target` by damped Gauss–Newton from `y0`.
fn gauss_newton(gen: &Plot, target: &[f64], y0: &[f64]) -> Option<Vec<f64>> {
    let q = y0.len();
    let scale = 1.0 + target.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let mut y = y0.to_vec();
    let resid = |y: &[f64]| -> Vec<f64> { gen.eval(y).iter().zip(target).map(|(a, b)| a - b).collect() };
    let norm = |r: &[f64]| r.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut r = resid(&y);
    let mut lambda = 1e-10;
    for _ in 0..60 {
        let rn = norm(&r);
        // Iterate to round-off: reconstructed samples feed high-order differences.
        if rn <= 2.0 * f64::EPSILON * scale {
            return Some(y);
        }
        let jac = gen.jacobian(&y);
        let j = DMatrix::from_fn(r.len(), q, |a, b| jac[a][b]);
        let jt = j.transpose();
        let g = &jt * DVector::from_column_slice(&r);
        let mut improved = false;
        for _ in 0..12 {
            let mut m = &jt * &j;
            for k in 0..q {
                m[(k, k)] += lambda * (1.0 + m[(k, k)]);
            }
            let Some(step) = m.lu().solve(&(-&g)) else {
                lambda *= 10.0;
                continue;
            };
            let cand: Vec<f64> = y.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            if !gen.domain().contains(&cand) {
                lambda *= 10.0;
                continue;
            }
            let rc = resid(&cand);
            if norm(&rc) < rn {
                y = cand;
                r = rc;
                lambda = (lambda * 0.1).max(1e-14);
                improved = true;
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    (norm(&r) <= 1e-10 * scale).then_some(y)
}

/// Preimages of one line of candidate values, by continuation.
fn reconstruct_line(gen: &Plot, targets: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let q = gen.source_dim();
    let first = targets.first()?;
    let y0 = coarse_start(gen, first)?;
    let mut out: Vec<Vec<f64>> = vec![gauss_newton(gen, first, &y0)?];
    for c in &targets[1..] {
        let n = out.len();
        let guess: Vec<f64> = if n >= 2 {
            (0..q).map(|k| 2.0 * out[n - 1][k] - out[n - 2][k]).collect()
        } else {
            out[n - 1].clone()
        };
        let guess = if gen.domain().contains(&guess) { guess } else { out[n - 1].clone() };
        out.push(gauss_newton(gen, c, &guess)?);
    }
    Some(out)
}

/// Best point of a coarse grid over the generator's sampling box.
fn coarse_start(gen: &Plot, target: &[f64]) -> Option<Vec<f64>> {
    let q = gen.source_dim();
    let per_axis: usize = match q {
        0 => return Some(Vec::new()),
        1 => 33,
        2 => 11,
        3 => 5,
        _ => 1,
    };
    let dom = gen.domain();
    let mut best: Option<(f64, Vec<f64>)> = None;
    let total = per_axis.pow(q as u32);
    for idx in 0..total {
        let mut rem = idx;
        let y: Vec<f64> = (0..q)
            .map(|k| {
                let i = rem % per_axis;
                rem /= per_axis;
                let (a, b) = dom.sample_interval(k);
                if per_axis == 1 {
                    0.5 * (a + b)
                } else {
                    a + (b - a) * (i as f64 + 0.5) / per_axis as f64
                }
            })
            .collect();
        if !dom.contains(&y) {
            continue;
        }
        let d: f64 = gen.eval(&y).iter().zip(target).map(|(a, b)| (a - b).powi(2)).sum();
        if best.as_ref().map(|b| d < b.0).unwrap_or(true) {
            best = Some((d, y));
        }
    }
    best.map(|b| b.1)
}

#[allow(clippy::too_many_arguments)]
fn pushforward_membership(
    candidate: &Plot,
    parent: &Diffeology,
    map: &MapFn,
    label: &str,
    budget: usize,
    hints: &[Plot],
    lines: &[SampleLine],
    values: &[Vec<Vec<f64>>],
) -> Result<Membership> {
    let pd = parent.space_dim();
    let mut attempts = 0;
    let mut last = format!("no lift through '{label}' found");
    for (i, lift) in hints.iter().enumerate() {
        if lift.source_dim() != candidate.source_dim() || lift.target_dim() != pd {
            continue;
        }
        if attempts == budget {
            break;
        }
        attempts += 1;
        let mismatch = lines
            .iter()
            .zip(values)
            .flat_map(|(l, v)| l.points.iter().zip(v))
            .map(|(u, c)| {
                map(&lift.eval(u))
                    .iter()
                    .zip(c)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if mismatch > 1e-9 {
            last = format!("hint {i} is not a lift ({mismatch:.3e})");
            continue;
        }
        match is_plot_with_hints(lift, parent, budget, hints)? {
            Membership::Accepted(w) => {
                return Ok(Membership::Accepted(Witness::Pushforward {
                    lift: TestMapSource::Hint(i),
                    inner: Box::new(w),
                }))
            }
            Membership::Rejected(r) => last = format!("lift {i} rejected upstairs: {}", r.reason),
        }
    }
    Ok(Membership::reject(last, None, attempts))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line_plot(label: &str, a: f64, b: f64, f: impl Fn(f64) -> Vec<f64> + Send + Sync + 'static, d: usize) -> Plot {
        Plot::from_fn(label, OpenBox::new(vec![a], vec![b]).unwrap(), d, move |u| f(u[0]))
    }

    #[test]
    fn constants_are_plots() {
        let r2 = Diffeology::standard(2);
        let c = Plot::constant("c", OpenBox::cube(3, -1.0, 1.0).unwrap(), vec![0.5, -2.0]);
        assert_eq!(is_plot(&c, &r2, 4).unwrap(), Membership::Accepted(Witness::Constant));
    }

    #[test]
    fn absolute_value_is_rejected_by_the_probe() {
        let r = Diffeology::standard(1);
        let abs = line_plot("abs", -1.0, 1.0, |t| vec![t.abs()], 1);
        let m = is_plot(&abs, &r, 8).unwrap();
        let rej = m.rejection().expect("rejected");
        assert!(rej.failed_probe.as_ref().is_some_and(|p| !p.smooth), "{rej:?}");
    }

    #[test]
    fn generator_after_polynomial_reparametrization() {
        let circle = line_plot("circle", -10.0, 10.0, |t| vec![t.cos(), t.sin()], 2);
        let diff = Diffeology::generated(2, vec![circle]).unwrap();
        let cand = line_plot("c", -1.0, 1.2, |s| {
            let t = s * s * s - 0.5 * s + 0.2;
            vec![t.cos(), t.sin()]
        }, 2);
        let m = is_plot(&cand, &diff, 8).unwrap();
        assert!(
            matches!(m.witness(), Some(Witness::Generator { source: TestMapSource::Reconstructed, .. })),
            "{m:?}"
        );
    }

    #[test]
    fn dimension_mismatch_is_a_shape_error() {
        let r2 = Diffeology::standard(2);
        let c = line_plot("c", 0.0, 1.0, |t| vec![t], 1);
        assert!(matches!(is_plot(&c, &r2, 1), Err(HolabError::Shape(_))));
    }

    #[test]
    fn gluing_over_an_explicit_cover() {
        let r = Diffeology::standard(1);
        let c = line_plot("c", -1.0, 1.0, |t| vec![t.sin()], 1);
        let cover = [
            OpenBox::new(vec![-1.0], vec![0.2]).unwrap(),
            OpenBox::new(vec![-0.1], vec![1.0]).unwrap(),
        ];
        let m = is_plot_glued(&c, &r, &cover, 4).unwrap();
        assert!(matches!(m.witness(), Some(Witness::Glued(w)) if w.len() == 2));
        let gap = [OpenBox::new(vec![-1.0], vec![0.2]).unwrap()];
        assert!(!is_plot_glued(&c, &r, &gap, 4).unwrap().is_accepted());
    }

    #[test]
    fn inconsistent_connecting_maps_are_reported() {
        let id: MapFn = Arc::new(|x: &[f64]| x.to_vec());
        let twice: MapFn = Arc::new(|x: &[f64]| x.iter().map(|v| 2.0 * v).collect());
        let r = projective_limit_diffeology(
            vec![Diffeology::standard(1), Diffeology::standard(1)],
            vec![id.clone(), id],
            &[twice],
            1,
            &[vec![0.3]],
        );
        assert!(matches!(r, Err(HolabError::Consistency(_))));
    }
}
