//! JSON descriptions of generated diffeologies.
//!
//! ```json
//! {"space_dim": 2,
//!  "generators": [
//!    {"label": "unit circle", "registry": "circle", "params": {"radius": 1.0}},
//!    {"label": "parabola", "domain": [[-1, 1]], "vars": ["t"], "map": ["t", "t^2"]}]}
//! ```
//!
//! Registry maps: `identity`, `line` (`point`, `direction`), `circle`
//! (`radius`, `center`), `polynomial` (`coefficients`, one list per output,
//! lowest degree first) and `stereographic` (inverse stereographic chart
//! `ℝ² → S² ⊂ ℝ³`).

use std::sync::Arc;

use serde::Deserialize;
use serde_json::Value;

use super::plot::{MapFn, OpenBox, Plot};
use super::space::{Diffeology, Generator};
use crate::error::{HolabError, Result};
use crate::expr::ExprMap;

#[derive(Deserialize)]
struct Doc {
    space_dim: usize,
    generators: Vec<Value>,
}

pub fn diffeology_from_json(text: &str) -> Result<Diffeology> {
    let doc: Doc = serde_json::from_str(text).map_err(|e| HolabError::validation("$", e.to_string()))?;
    let mut gens = Vec::with_capacity(doc.generators.len());
    for (i, g) in doc.generators.iter().enumerate() {
        let path = format!("$.generators[{i}]");
        gens.push(generator_from_value(g, doc.space_dim, &path)?);
    }
    Diffeology::generated_with(doc.space_dim, gens)
}

fn field<'a>(v: &'a Value, key: &str, path: &str) -> Result<&'a Value> {
    v.get(key)
        .ok_or_else(|| HolabError::validation(format!("{path}.{key}"), "missing field"))
}

fn num(v: &Value, path: &str) -> Result<f64> {
    v.as_f64().ok_or_else(|| HolabError::validation(path, "expected a number"))
}

fn num_list(v: &Value, path: &str) -> Result<Vec<f64>> {
    v.as_array()
        .ok_or_else(|| HolabError::validation(path, "expected an array of numbers"))?
        .iter()
        .enumerate()
        .map(|(i, x)| num(x, &format!("{path}[{i}]")))
        .collect()
}

pub(crate) fn domain_from_value(v: &Value, path: &str) -> Result<OpenBox> {
    let pairs = v
        .as_array()
        .ok_or_else(|| HolabError::validation(path, "expected [[lo, hi], ...]"))?;
    let mut lo = Vec::new();
    let mut hi = Vec::new();
    for (i, p) in pairs.iter().enumerate() {
        let ab = num_list(p, &format!("{path}[{i}]"))?;
        if ab.len() != 2 || !(ab[0] < ab[1]) {
            return Err(HolabError::validation(format!("{path}[{i}]"), "expected lo < hi"));
        }
        lo.push(ab[0]);
        hi.push(ab[1]);
    }
    OpenBox::new(lo, hi).map_err(|e| HolabError::validation(path, e.to_string()))
}

fn generator_from_value(g: &Value, d: usize, path: &str) -> Result<Generator> {
    let label = g
        .get("label")
        .and_then(Value::as_str)
        .unwrap_or("generator")
        .to_string();
    if let Some(name) = g.get("registry") {
        let name = name
            .as_str()
            .ok_or_else(|| HolabError::validation(format!("{path}.registry"), "expected a string"))?;
        let params = g.get("params").cloned().unwrap_or(Value::Null);
        return registry(name, &label, &params, d, &format!("{path}.params"));
    }
    let domain = domain_from_value(field(g, "domain", path)?, &format!("{path}.domain"))?;
    let p = domain.dim();
    let vars: Vec<String> = match g.get("vars") {
        Some(v) => v
            .as_array()
            .ok_or_else(|| HolabError::validation(format!("{path}.vars"), "expected an array"))?
            .iter()
            .map(|s| s.as_str().map(str::to_string))
            .collect::<Option<_>>()
            .ok_or_else(|| HolabError::validation(format!("{path}.vars"), "expected strings"))?,
        None => (0..p).map(|i| format!("u{i}")).collect(),
    };
    if vars.len() != p {
        return Err(HolabError::validation(format!("{path}.vars"), "one variable per domain axis"));
    }
    let srcs: Vec<String> = field(g, "map", path)?
        .as_array()
        .ok_or_else(|| HolabError::validation(format!("{path}.map"), "expected an array of expressions"))?
        .iter()
        .map(|s| s.as_str().map(str::to_string))
        .collect::<Option<_>>()
        .ok_or_else(|| HolabError::validation(format!("{path}.map"), "expected strings"))?;
    if srcs.len() != d {
        return Err(HolabError::validation(
            format!("{path}.map"),
            format!("expected {d} components, got {}", srcs.len()),
        ));
    }
    let var_refs: Vec<&str> = vars.iter().map(String::as_str).collect();
    let map = ExprMap::parse(&srcs, &var_refs).map_err(|e| HolabError::validation(format!("{path}.map"), e.to_string()))?;
    Ok(Generator::new(Plot::new(label, domain, d, map.into_fn())))
}

fn registry(name: &str, label: &str, params: &Value, d: usize, path: &str) -> Result<Generator> {
    let get = |k: &str| params.get(k);
    match name {
        "identity" => {
            let id: MapFn = Arc::new(|x: &[f64]| x.to_vec());
            Ok(Generator::with_inverse(
                Plot::new(label, OpenBox::whole(d), d, id.clone()),
                id,
            ))
        }
        "line" => {
            let point = num_list(get("point").ok_or_else(|| HolabError::validation(format!("{path}.point"), "missing field"))?, &format!("{path}.point"))?;
            let dir = num_list(get("direction").ok_or_else(|| HolabError::validation(format!("{path}.direction"), "missing field"))?, &format!("{path}.direction"))?;
            if point.len() != d || dir.len() != d {
                return Err(HolabError::validation(path, format!("point and direction need {d} entries")));
            }
            let n2: f64 = dir.iter().map(|v| v * v).sum();
            if n2 == 0.0 {
                return Err(HolabError::validation(format!("{path}.direction"), "zero direction"));
            }
            let (p1, d1) = (point.clone(), dir.clone());
            let inv: MapFn = Arc::new(move |x: &[f64]| {
                vec![x.iter().zip(&point).zip(&dir).map(|((x, p), v)| (x - p) * v).sum::<f64>() / n2]
            });
            let plot = Plot::from_fn(label, OpenBox::whole(1), d, move |u| {
                p1.iter().zip(&d1).map(|(p, v)| p + u[0] * v).collect()
            });
            Ok(Generator::with_inverse(plot, inv))
        }
        "circle" => {
            if d != 2 {
                return Err(HolabError::validation(path, "circle needs space_dim 2"));
            }
            let r = match get("radius") {
                Some(v) => num(v, &format!("{path}.radius"))?,
                None => 1.0,
            };
            let c = match get("center") {
                Some(v) => num_list(v, &format!("{path}.center"))?,
                None => vec![0.0, 0.0],
            };
            if c.len() != 2 || !(r > 0.0) {
                return Err(HolabError::validation(path, "circle needs radius > 0 and a 2-D center"));
            }
            let dom = OpenBox::new(vec![-4.0 * std::f64::consts::PI], vec![4.0 * std::f64::consts::PI])?;
            Ok(Generator::new(Plot::from_fn(label, dom, 2, move |u| {
                vec![c[0] + r * u[0].cos(), c[1] + r * u[0].sin()]
            })))
        }
        "polynomial" => {
            let rows = get("coefficients")
                .and_then(Value::as_array)
                .ok_or_else(|| HolabError::validation(format!("{path}.coefficients"), "expected one list per output"))?;
            if rows.len() != d {
                return Err(HolabError::validation(format!("{path}.coefficients"), format!("expected {d} lists")));
            }
            let coeffs: Vec<Vec<f64>> = rows
                .iter()
                .enumerate()
                .map(|(i, r)| num_list(r, &format!("{path}.coefficients[{i}]")))
                .collect::<Result<_>>()?;
            let dom = match get("domain") {
                Some(v) => domain_from_value(v, &format!("{path}.domain"))?,
                None => OpenBox::whole(1),
            };
            Ok(Generator::new(Plot::from_fn(label, dom, d, move |u| {
                coeffs
                    .iter()
                    .map(|c| c.iter().rev().fold(0.0, |acc, a| acc * u[0] + a))
                    .collect()
            })))
        }
        "stereographic" => {
            if d != 3 {
                return Err(HolabError::validation(path, "stereographic chart needs space_dim 3"));
            }
            Ok(Generator::new(Plot::from_fn(label, OpenBox::whole(2), 3, |u| {
                let s = 1.0 + u[0] * u[0] + u[1] * u[1];
                vec![2.0 * u[0] / s, 2.0 * u[1] / s, (s - 2.0) / s]
            })))
        }
        other => Err(HolabError::validation(path, format!("unknown registry map '{other}'"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffeology::is_plot;

    #[test]
    fn loads_registry_and_expression_generators() {
        let text = r#"{"space_dim": 2, "generators": [
            {"label": "c", "registry": "circle", "params": {"radius": 2.0}},
            {"label": "parabola", "domain": [[-1, 1]], "vars": ["t"], "map": ["t", "t^2"]}]}"#;
        let d = diffeology_from_json(text).unwrap();
        let gens = d.generators().unwrap();
        assert_eq!(gens.len(), 2);
        assert_eq!(gens[1].eval(&[0.5]), vec![0.5, 0.25]);
        let cand = Plot::from_fn("arc", OpenBox::new(vec![0.0], vec![1.0]).unwrap(), 2, |u| {
            let t = 1.0 + u[0] * u[0];
            vec![2.0 * t.cos(), 2.0 * t.sin()]
        });
        assert!(is_plot(&cand, &d, 8).unwrap().is_accepted());
    }

    #[test]
    fn validation_errors_name_the_field() {
        let bad = r#"{"space_dim": 2, "generators": [{"domain": [[0, 1]], "map": ["u0"]}]}"#;
        match diffeology_from_json(bad) {
            Err(HolabError::Validation { path, .. }) => assert_eq!(path, "$.generators[0].map"),
            other => panic!("{other:?}"),
        }
        let unknown = r#"{"space_dim": 2, "generators": [{"registry": "torus"}]}"#;
        assert!(matches!(diffeology_from_json(unknown), Err(HolabError::Validation { .. })));
    }
}
