use std::sync::Arc;

use serde_json::{Map, Value};

use super::{Expectation, Homotopy, LoopFamily, Properties, Scenario};
use crate::bundle::{BaseChart, ConnectionData, FormTerm, SmoothPath};
use crate::curvature::Embedding;
use crate::diffeology::{domain_from_value, sample_lines};
use crate::error::{HolabError, Result};
use crate::expr::{parse, ExprMap};
use crate::holonomy::{Flatness, Loop};
use crate::liealg::{AlgebraBasis, MatrixAlgebra};

pub const SCHEMA_VERSION: u64 = 1;

fn field<'a>(v: &'a Value, key: &str, path: &str) -> Result<&'a Value> {
    v.get(key)
        .ok_or_else(|| HolabError::validation(format!("{path}.{key}"), "missing field"))
}

fn as_str<'a>(v: &'a Value, path: &str) -> Result<&'a str> {
    v.as_str().ok_or_else(|| HolabError::validation(path, "expected a string"))
}

fn as_array<'a>(v: &'a Value, path: &str) -> Result<&'a Vec<Value>> {
    v.as_array().ok_or_else(|| HolabError::validation(path, "expected an array"))
}

/// A number, or a string holding a constant expression such as `"pi/6"`.
fn constant(v: &Value, path: &str) -> Result<f64> {
    if let Some(x) = v.as_f64() {
        return Ok(x);
    }
    let s = v
        .as_str()
        .ok_or_else(|| HolabError::validation(path, "expected a number or a constant expression"))?;
    let e = parse(s, &[]).map_err(|e| HolabError::validation(path, e.to_string()))?;
    let x = e.eval(&[]);
    if !x.is_finite() {
        return Err(HolabError::validation(path, "constant is not finite"));
    }
    Ok(x)
}

fn constants(v: &Value, path: &str) -> Result<Vec<f64>> {
    as_array(v, path)?
        .iter()
        .enumerate()
        .map(|(i, x)| constant(x, &format!("{path}[{i}]")))
        .collect()
}

fn strings(v: &Value, path: &str) -> Result<Vec<String>> {
    as_array(v, path)?
        .iter()
        .enumerate()
        .map(|(i, s)| as_str(s, &format!("{path}[{i}]")).map(str::to_string))
        .collect()
}

fn integers(v: &Value, path: &str) -> Result<Vec<i64>> {
    as_array(v, path)?
        .iter()
        .enumerate()
        .map(|(i, s)| {
            s.as_i64()
                .ok_or_else(|| HolabError::validation(format!("{path}[{i}]"), "expected an integer"))
        })
        .collect()
}

fn boolean(v: &Value, key: &str, path: &str) -> Result<bool> {
    match v.get(key) {
        None | Some(Value::Null) => Ok(false),
        Some(b) => b
            .as_bool()
            .ok_or_else(|| HolabError::validation(format!("{path}.{key}"), "expected a boolean")),
    }
}

/// A path `t ↦ expr(t, params…)` with its symbolic velocity.
fn expression_path(label: String, map: Arc<ExprMap>, params: Vec<f64>) -> SmoothPath {
    let dim = map.components.len();
    let (m1, p1) = (map.clone(), params.clone());
    let with_t = move |t: f64, p: &[f64]| {
        let mut x = Vec::with_capacity(p.len() + 1);
        x.push(t);
        x.extend_from_slice(p);
        x
    };
    let w2 = with_t;
    SmoothPath::from_fn(label, dim, move |t| m1.eval(&with_t(t, &p1))).with_derivative(Arc::new(move |t| {
        let x = w2(t, &params);
        map.jacobian.iter().map(|row| row[0].eval(&x)).collect()
    }))
}

fn compile_path(v: &Value, vars: &[&str], dim: usize, path: &str) -> Result<Arc<ExprMap>> {
    let srcs = strings(v, path)?;
    if srcs.len() != dim {
        return Err(HolabError::validation(path, format!("expected {dim} components, got {}", srcs.len())));
    }
    ExprMap::parse(&srcs, vars)
        .map(Arc::new)
        .map_err(|e| HolabError::validation(path, e.to_string()))
}

fn offset_for(v: &Value, chart: &BaseChart, path: &str) -> Result<Vec<f64>> {
    match v.get("winding") {
        None | Some(Value::Null) => Ok(vec![0.0; chart.dim()]),
        Some(w) => {
            let p = format!("{path}.winding");
            let n = integers(w, &p)?;
            chart.lattice_vector(&n).map_err(|e| HolabError::validation(p, e.to_string()))
        }
    }
}

fn make_loop(id: String, p: SmoothPath, offset: &[f64], chart: &BaseChart, path: &str) -> Result<Loop> {
    Loop::with_offset(id, p, offset.to_vec(), chart).map_err(|e| HolabError::validation(path, e.to_string()))
}

/// Cartesian product of parameter lists, first key varying slowest.
fn grid(params: &Map<String, Value>, path: &str) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut names = Vec::new();
    let mut combos: Vec<Vec<f64>> = vec![Vec::new()];
    for (k, vals) in params {
        let vals = constants(vals, &format!("{path}.{k}"))?;
        if vals.is_empty() {
            return Err(HolabError::validation(format!("{path}.{k}"), "empty parameter list"));
        }
        names.push(k.clone());
        combos = combos
            .into_iter()
            .flat_map(|c| {
                vals.iter().map(move |v| {
                    let mut c = c.clone();
                    c.push(*v);
                    c
                })
            })
            .collect();
    }
    Ok((names, combos))
}

fn load_family(v: &Value, chart: &BaseChart, path: &str) -> Result<LoopFamily> {
    let name = as_str(field(v, "name", path)?, &format!("{path}.name"))?.to_string();
    let empty = Map::new();
    let params = match v.get("params") {
        None | Some(Value::Null) => &empty,
        Some(p) => p
            .as_object()
            .ok_or_else(|| HolabError::validation(format!("{path}.params"), "expected an object"))?,
    };
    let (names, combos) = grid(params, &format!("{path}.params"))?;
    let mut vars = vec!["t"];
    vars.extend(names.iter().map(String::as_str));
    let map = compile_path(field(v, "path", path)?, &vars, chart.dim(), &format!("{path}.path"))?;
    let offset = offset_for(v, chart, path)?;
    let mut loops = Vec::with_capacity(combos.len());
    for combo in combos.clone() {
        let tag = names
            .iter()
            .zip(&combo)
            .map(|(n, x)| format!("{n}={x}"))
            .collect::<Vec<_>>()
            .join(",");
        let id = if tag.is_empty() { name.clone() } else { format!("{name}[{tag}]") };
        let p = expression_path(id.clone(), map.clone(), combo);
        loops.push(make_loop(id, p, &offset, chart, &format!("{path}.path"))?);
    }
    Ok(LoopFamily {
        name,
        param_names: names,
        params: combos,
        loops,
    })
}

fn load_homotopy(v: &Value, chart: &BaseChart, path: &str) -> Result<Homotopy> {
    let name = as_str(field(v, "name", path)?, &format!("{path}.name"))?.to_string();
    let range = match v.get("s_range") {
        None => vec![0.0, 1.0],
        Some(r) => constants(r, &format!("{path}.s_range"))?,
    };
    if range.len() != 2 {
        return Err(HolabError::validation(format!("{path}.s_range"), "expected [s0, s1]"));
    }
    let samples = match v.get("samples") {
        None => 10,
        Some(n) => n
            .as_u64()
            .filter(|n| *n >= 2)
            .ok_or_else(|| HolabError::validation(format!("{path}.samples"), "expected an integer ≥ 2"))?
            as usize,
    };
    let map = compile_path(field(v, "path", path)?, &["t", "s"], chart.dim(), &format!("{path}.path"))?;
    let offset = offset_for(v, chart, path)?;
    let winding = match v.get("winding") {
        None | Some(Value::Null) => vec![0; chart.dim()],
        Some(w) => integers(w, &format!("{path}.winding"))?,
    };
    let mut loops = Vec::with_capacity(samples);
    for k in 0..samples {
        let s = range[0] + (range[1] - range[0]) * k as f64 / (samples - 1) as f64;
        let id = format!("{name}[s={s}]");
        let p = expression_path(id.clone(), map.clone(), vec![s]);
        loops.push(make_loop(id, p, &offset, chart, &format!("{path}.path"))?);
    }
    Ok(Homotopy { name, winding, loops })
}

fn load_basis(doc: &Value, tag: MatrixAlgebra) -> Result<AlgebraBasis> {
    match doc.get("basis") {
        None | Some(Value::Null) => Ok(tag.standard_basis()),
        Some(b) => {
            let rows: Vec<Vec<f64>> = as_array(b, "$.basis")?
                .iter()
                .enumerate()
                .map(|(i, r)| constants(r, &format!("$.basis[{i}]")))
                .collect::<Result<_>>()?;
            let basis = AlgebraBasis::from_json_parts(&tag.algebra_name(), tag.size(), &rows)
                .map_err(|e| HolabError::validation("$.basis", e.to_string()))?;
            if basis.tag() != tag {
                return Err(HolabError::validation("$.basis", format!("basis is not in {}", tag.algebra_name())));
            }
            Ok(basis)
        }
    }
}

fn load_properties(v: Option<&Value>) -> Result<Properties> {
    let path = "$.properties";
    let Some(v) = v else {
        return Ok(Properties::default());
    };
    let reducible_to = match v.get("reducible_to") {
        None | Some(Value::Null) => None,
        Some(e) => Some(
            serde_json::from_value::<Embedding>(e.clone())
                .map_err(|err| HolabError::validation(format!("{path}.reducible_to"), err.to_string()))?,
        ),
    };
    Ok(Properties {
        flat: boolean(v, "flat", path)?,
        abelian: boolean(v, "abelian", path)?,
        simply_connected: boolean(v, "simply_connected", path)?,
        reducible_to,
    })
}

fn point(doc: &Value, key: &str, chart: &BaseChart) -> Result<Vec<f64>> {
    let p = constants(field(doc, key, "$")?, &format!("$.{key}"))?;
    chart
        .check(&p)
        .map_err(|e| HolabError::validation(format!("$.{key}"), e.to_string()))?;
    Ok(p)
}

fn load_expectations(entries: &[Value], families: &[LoopFamily]) -> Result<Vec<Expectation>> {
    let mut out = Vec::new();
    for (i, e) in entries.iter().enumerate() {
        let path = format!("$.expected[{i}]");
        match e.get("quantity").and_then(Value::as_str) {
            Some("holonomy_angle") => {
                let family = as_str(field(e, "family", &path)?, &format!("{path}.family"))?.to_string();
                let fam = families.iter().find(|f| f.name == family).ok_or_else(|| {
                    HolabError::validation(format!("{path}.family"), format!("unknown loop family '{family}'"))
                })?;
                let vars: Vec<&str> = fam.param_names.iter().map(String::as_str).collect();
                let src = as_str(field(e, "angle", &path)?, &format!("{path}.angle"))?;
                let angle = parse(src, &vars).map_err(|err| HolabError::validation(format!("{path}.angle"), err.to_string()))?;
                out.push(Expectation::HolonomyAngle {
                    family,
                    angle: Arc::new(angle),
                });
            }
            Some("reduced_algebra_rank") => {
                let n = field(e, "value", &path)?
                    .as_u64()
                    .ok_or_else(|| HolabError::validation(format!("{path}.value"), "expected a rank"))?;
                out.push(Expectation::ReducedRank(n as usize));
            }
            Some("flatness") => {
                let v = as_str(field(e, "value", &path)?, &format!("{path}.value"))?;
                let f = match v {
                    "not_flat" => Flatness::NotFlat,
                    "flat" => Flatness::Flat,
                    "totally_flat" => Flatness::TotallyFlat,
                    other => {
                        return Err(HolabError::validation(
                            format!("{path}.value"),
                            format!("unknown flatness '{other}'"),
                        ))
                    }
                };
                out.push(Expectation::Flatness(f));
            }
            _ => {}
        }
    }
    Ok(out)
}

pub fn scenario_from_value(doc: &Value) -> Result<Scenario> {
    let version = field(doc, "schema_version", "$")?
        .as_u64()
        .ok_or_else(|| HolabError::validation("$.schema_version", "expected an integer"))?;
    if version != SCHEMA_VERSION {
        return Err(HolabError::validation(
            "$.schema_version",
            format!("unsupported version {version}, expected {SCHEMA_VERSION}"),
        ));
    }
    let name = as_str(field(doc, "name", "$")?, "$.name")?.to_string();
    let description = doc.get("description").and_then(Value::as_str).unwrap_or("").to_string();

    let c = field(doc, "chart", "$")?;
    let vars = strings(field(c, "vars", "$.chart")?, "$.chart.vars")?;
    let domain = domain_from_value(field(c, "domain", "$.chart")?, "$.chart.domain")?;
    if vars.len() != domain.dim() {
        return Err(HolabError::validation("$.chart.vars", "one variable per domain axis"));
    }
    let chart_name = c.get("name").and_then(Value::as_str).unwrap_or("chart");
    let mut chart = BaseChart::new(chart_name, domain).map_err(|e| HolabError::validation("$.chart", e.to_string()))?;
    if let Some(p) = c.get("periods").filter(|p| !p.is_null()) {
        chart = chart
            .with_periods(constants(p, "$.chart.periods")?)
            .map_err(|e| HolabError::validation("$.chart.periods", e.to_string()))?;
    }

    let group = as_str(field(doc, "group", "$")?, "$.group")?;
    let tag = MatrixAlgebra::parse(group)
        .ok_or_else(|| HolabError::validation("$.group", format!("unknown group '{group}'")))?;
    let basis = load_basis(doc, tag)?;

    let conn_v = field(doc, "connection", "$")?;
    let terms_v = as_array(field(conn_v, "terms", "$.connection")?, "$.connection.terms")?;
    let mut terms = Vec::with_capacity(terms_v.len());
    for (i, t) in terms_v.iter().enumerate() {
        let p = format!("$.connection.terms[{i}]");
        let coeff = as_str(field(t, "coeff", &p)?, &format!("{p}.coeff"))?.to_string();
        let dx_v = field(t, "dx", &p)?;
        let dx = match (dx_v.as_str(), dx_v.as_u64()) {
            (Some(s), _) => vars
                .iter()
                .position(|v| v == s)
                .ok_or_else(|| HolabError::validation(format!("{p}.dx"), format!("unknown variable '{s}'")))?,
            (None, Some(k)) => k as usize,
            _ => return Err(HolabError::validation(format!("{p}.dx"), "expected a variable name or index")),
        };
        let b = field(t, "basis", &p)?
            .as_u64()
            .ok_or_else(|| HolabError::validation(format!("{p}.basis"), "expected a basis index"))? as usize;
        if dx >= vars.len() || b >= basis.dim() {
            return Err(HolabError::validation(p, "dx or basis index out of range"));
        }
        parse(&coeff, &vars.iter().map(String::as_str).collect::<Vec<_>>())
            .map_err(|e| HolabError::validation(format!("{p}.coeff"), e.to_string()))?;
        terms.push(FormTerm { coeff, dx, basis: b });
    }
    let var_refs: Vec<&str> = vars.iter().map(String::as_str).collect();
    let connection = ConnectionData::from_terms(name.clone(), chart.clone(), basis, &var_refs, &terms)
        .map_err(|e| HolabError::validation("$.connection", e.to_string()))?;

    let basepoint = point(doc, "basepoint", &chart)?;
    let center = match doc.get("center") {
        Some(_) => point(doc, "center", &chart)?,
        None => chart.domain().center(),
    };
    let loop_radius = constant(field(doc, "loop_radius", "$")?, "$.loop_radius")?;
    if !(loop_radius > 0.0) || chart.domain().margin(&basepoint) <= 2.0 * loop_radius {
        return Err(HolabError::validation(
            "$.loop_radius",
            "must be positive with twice its value inside the chart around the basepoint",
        ));
    }

    let mut loop_families = Vec::new();
    if let Some(f) = doc.get("loop_families") {
        for (i, fam) in as_array(f, "$.loop_families")?.iter().enumerate() {
            loop_families.push(load_family(fam, &chart, &format!("$.loop_families[{i}]"))?);
        }
    }
    let mut homotopies = Vec::new();
    if let Some(h) = doc.get("homotopies") {
        for (i, hom) in as_array(h, "$.homotopies")?.iter().enumerate() {
            homotopies.push(load_homotopy(hom, &chart, &format!("$.homotopies[{i}]"))?);
        }
    }
    let expected = match doc.get("expected") {
        None => Vec::new(),
        Some(e) => as_array(e, "$.expected")?.clone(),
    };
    let expectations = load_expectations(&expected, &loop_families)?;

    let scenario = Scenario {
        name,
        description,
        vars,
        chart,
        connection,
        basepoint,
        center,
        loop_radius,
        properties: load_properties(doc.get("properties"))?,
        loop_families,
        homotopies,
        expected,
        expectations,
    };
    validate_evaluation(&scenario)?;
    Ok(scenario)
}

/// Every coefficient is finite on the chart sample grid and every loop
/// stays inside the chart.
fn validate_evaluation(s: &Scenario) -> Result<()> {
    let d = s.chart.dim();
    for line in sample_lines(s.chart.domain(), 9) {
        for x in &line.points {
            for k in 0..d {
                let mut e = vec![0.0; d];
                e[k] = 1.0;
                s.connection
                    .a_matrix(x, &e)
                    .map_err(|err| HolabError::validation("$.connection", err.to_string()))?;
            }
        }
    }
    let families = s
        .loop_families
        .iter()
        .enumerate()
        .flat_map(|(i, f)| f.loops.iter().map(move |l| (format!("$.loop_families[{i}]"), l)))
        .chain(
            s.homotopies
                .iter()
                .enumerate()
                .flat_map(|(i, h)| h.loops.iter().map(move |l| (format!("$.homotopies[{i}]"), l))),
        );
    for (path, l) in families {
        for k in 0..=64 {
            let x = l.path().position(k as f64 / 64.0);
            if !s.chart.contains(&x) || x.iter().any(|v| !v.is_finite()) {
                return Err(HolabError::validation(
                    format!("{path}.path"),
                    format!("loop '{}' leaves the chart at {x:?}", l.id()),
                ));
            }
        }
    }
    Ok(())
}
