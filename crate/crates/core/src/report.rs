//! Run reports: result tables, checks, and their JSON, CSV and SVG forms.
//!
//! Output is deterministic: JSON objects have sorted keys, floats are
//! written with 17 significant digits, NaN and infinities become `null`,
//! and wall-clock timing is kept out of every file.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::error::{HolabError, Result};

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Bool(bool),
}

impl Cell {
    fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Num(x) => Some(*x),
            Cell::Int(i) => Some(*i as f64),
            _ => None,
        }
    }

    fn csv(&self) -> String {
        match self {
            Cell::Num(x) => fmt_float(*x).unwrap_or_default(),
            Cell::Int(i) => i.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(i: usize) -> Self {
        Cell::Int(i as i64)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Bool(b)
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

/// How a table is drawn: column `x` against the `ys` columns.
#[derive(Clone, Debug, Serialize)]
pub struct PlotHint {
    pub title: String,
    pub x: usize,
    pub ys: Vec<usize>,
    pub log_log: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub plot: Option<PlotHint>,
}

impl Table {
    pub fn new(name: impl Into<String>, columns: &[&str]) -> Self {
        Table {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            plot: None,
        }
    }

    /// Appends a row; panics on a width mismatch, which is a caller bug.
    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width of table '{}'", self.name);
        self.rows.push(row);
    }

    pub fn with_plot(mut self, title: impl Into<String>, x: usize, ys: &[usize], log_log: bool) -> Self {
        self.plot = Some(PlotHint {
            title: title.into(),
            x,
            ys: ys.to_vec(),
            log_log,
        });
        self
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.iter().map(Cell::csv).collect::<Vec<_>>().join(","));
            out.push('\n');
        }
        out
    }
}

/// One pass/fail criterion of a run.
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    /// Human-readable acceptance condition, e.g. `"<= 1e-6"`.
    pub condition: String,
    pub passed: bool,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Check {
            name: name.into(),
            value,
            condition: format!("<= {bound:e}"),
            passed: value <= bound,
        }
    }

    pub fn at_least(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Check {
            name: name.into(),
            value,
            condition: format!(">= {bound}"),
            passed: value >= bound,
        }
    }

    pub fn within(name: impl Into<String>, value: f64, lo: f64, hi: f64) -> Self {
        Check {
            name: name.into(),
            value,
            condition: format!("in [{lo}, {hi}]"),
            passed: (lo..=hi).contains(&value),
        }
    }

    pub fn holds(name: impl Into<String>, passed: bool, condition: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            value: if passed { 1.0 } else { 0.0 },
            condition: condition.into(),
            passed,
        }
    }
}

/// Parameters of a run as recorded in its report.
#[derive(Clone, Debug, Serialize)]
pub struct ReportParams {
    pub steps: usize,
    pub tol: f64,
    pub loops: usize,
    pub seed: u64,
    pub sign_convention: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub scenario: String,
    pub command: String,
    pub params: ReportParams,
    pub tables: Vec<Table>,
    pub checks: Vec<Check>,
    pub passed: bool,
    pub warnings: Vec<String>,
    /// Module-specific structured detail.
    pub detail: Value,
    /// Wall-clock seconds; never written to files.
    #[serde(skip)]
    pub timing: f64,
}

impl RunReport {
    pub fn failed_checks(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn to_json(&self) -> Result<String> {
        let v = serde_json::to_value(self).map_err(|e| HolabError::Numeric(format!("report serialization: {e}")))?;
        Ok(to_json_string(&v))
    }

    /// File stem `<command>-<scenario>` with path separators removed.
    pub fn stem(&self) -> String {
        let scen: String = self
            .scenario
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
            .collect();
        format!("{}-{scen}", self.command)
    }
}

/// `{:.16e}`: 17 significant digits; `None` for non-finite values.
fn fmt_float(x: f64) -> Option<String> {
    x.is_finite().then(|| format!("{x:.16e}"))
}

fn write_string(out: &mut String, s: &str) {
    out.push_str(&Value::String(s.to_string()).to_string());
}

fn write_value(v: &Value, indent: usize, out: &mut String) {
    let pad = |n: usize| "  ".repeat(n);
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                let _ = write!(out, "{i}");
            } else if let Some(u) = n.as_u64() {
                let _ = write!(out, "{u}");
            } else {
                match n.as_f64().and_then(fmt_float) {
                    Some(s) => out.push_str(&s),
                    None => out.push_str("null"),
                }
            }
        }
        Value::String(s) => write_string(out, s),
        Value::Array(items) if items.is_empty() => out.push_str("[]"),
        Value::Array(items) => {
            out.push_str("[\n");
            for (i, item) in items.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                write_value(item, indent + 1, out);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push(']');
        }
        Value::Object(map) if map.is_empty() => out.push_str("{}"),
        Value::Object(map) => {
            out.push_str("{\n");
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            for (i, k) in keys.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                write_string(out, k);
                out.push_str(": ");
                write_value(&map[*k], indent + 1, out);
                out.push_str(if i + 1 < keys.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push('}');
        }
    }
}

/// Deterministic pretty JSON; see the module notes for the number format.
pub fn to_json_string(v: &Value) -> String {
    let mut out = String::new();
    write_value(v, 0, &mut out);
    out.push('\n');
    out
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| HolabError::from(e).context(format!("writing {}", path.display())))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| HolabError::from(e).context(format!("creating {}", dir.display())))
}

/// Writes `<stem>.json` and, when `csv` is set, `<stem>-<table>.csv` per
/// table. Returns the written paths in order.
pub fn write_report(report: &RunReport, out_dir: &Path, csv: bool) -> Result<Vec<PathBuf>> {
    ensure_dir(out_dir)?;
    let mut files = Vec::new();
    let json = out_dir.join(format!("{}.json", report.stem()));
    write_file(&json, &report.to_json()?)?;
    files.push(json);
    if csv {
        for t in &report.tables {
            let p = out_dir.join(format!("{}-{}.csv", report.stem(), slug(&t.name)));
            write_file(&p, &t.to_csv())?;
            files.push(p);
        }
    }
    Ok(files)
}

fn slug(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_lowercase() } else { '_' })
        .collect()
}

/// Least-squares slope of `log y` against `log x` over positive pairs.
pub fn log_log_slope(points: &[(f64, f64)]) -> Option<f64> {
    let logs: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0 && x.is_finite() && y.is_finite())
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if logs.len() < 2 {
        return None;
    }
    let n = logs.len() as f64;
    let (mx, my) = (
        logs.iter().map(|p| p.0).sum::<f64>() / n,
        logs.iter().map(|p| p.1).sum::<f64>() / n,
    );
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

const SVG_W: f64 = 640.0;
const SVG_H: f64 = 400.0;
const MARGIN: f64 = 60.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// SVG line plot of a table with a plot hint, or `None` when nothing is
/// drawable. The table itself is embedded as CSV in `<desc>`.
pub fn render_svg(table: &Table) -> Option<String> {
    let hint = table.plot.as_ref()?;
    let tf = |v: f64| if hint.log_log { v.log10() } else { v };
    let series: Vec<(usize, Vec<(f64, f64)>)> = hint
        .ys
        .iter()
        .map(|&c| {
            let pts = table
                .rows
                .iter()
                .filter_map(|r| Some((r.get(hint.x)?.as_f64()?, r.get(c)?.as_f64()?)))
                .filter(|(x, y)| x.is_finite() && y.is_finite() && (!hint.log_log || (*x > 0.0 && *y > 0.0)))
                .collect::<Vec<_>>();
            (c, pts)
        })
        .filter(|(_, p)| !p.is_empty())
        .collect();
    if series.is_empty() {
        return None;
    }
    let all: Vec<(f64, f64)> = series.iter().flat_map(|(_, p)| p.iter().map(|&(x, y)| (tf(x), tf(y)))).collect();
    let (mut x0, mut x1, mut y0, mut y1) = all.iter().fold(
        (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY),
        |(a, b, c, d), &(x, y)| (a.min(x), b.max(x), c.min(y), d.max(y)),
    );
    if x1 - x0 < 1e-12 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    if y1 - y0 < 1e-12 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let px = |x: f64| MARGIN + (tf(x) - x0) / (x1 - x0) * (SVG_W - 2.0 * MARGIN);
    let py = |y: f64| SVG_H - MARGIN - (tf(y) - y0) / (y1 - y0) * (SVG_H - 2.0 * MARGIN);

    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SVG_W}\" height=\"{SVG_H}\" viewBox=\"0 0 {SVG_W} {SVG_H}\">"
    );
    let _ = writeln!(s, "<title>{}</title>", escape(&hint.title));
    let _ = writeln!(s, "<desc>\n{}</desc>", escape(&table.to_csv()));
    let _ = writeln!(s, "<rect width=\"{SVG_W}\" height=\"{SVG_H}\" fill=\"white\"/>");
    let _ = writeln!(
        s,
        "<rect x=\"{MARGIN}\" y=\"{MARGIN}\" width=\"{:.1}\" height=\"{:.1}\" fill=\"none\" stroke=\"black\"/>",
        SVG_W - 2.0 * MARGIN,
        SVG_H - 2.0 * MARGIN
    );
    let axis = |v: f64| if hint.log_log { format!("1e{v:.2}") } else { format!("{v:.4}") };
    let _ = writeln!(
        s,
        "<text x=\"{MARGIN}\" y=\"{:.1}\" font-size=\"11\">{}</text>",
        SVG_H - MARGIN + 16.0,
        axis(x0)
    );
    let _ = writeln!(
        s,
        "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"11\" text-anchor=\"end\">{}</text>",
        SVG_W - MARGIN,
        SVG_H - MARGIN + 16.0,
        axis(x1)
    );
    let _ = writeln!(s, "<text x=\"4\" y=\"{:.1}\" font-size=\"11\">{}</text>", SVG_H - MARGIN, axis(y0));
    let _ = writeln!(s, "<text x=\"4\" y=\"{MARGIN}\" font-size=\"11\">{}</text>", axis(y1));
    let _ = writeln!(
        s,
        "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"12\" text-anchor=\"middle\">{}</text>",
        SVG_W / 2.0,
        SVG_H - 16.0,
        escape(&table.columns[hint.x])
    );
    let _ = writeln!(
        s,
        "<text x=\"{:.1}\" y=\"24\" font-size=\"14\" text-anchor=\"middle\">{}</text>",
        SVG_W / 2.0,
        escape(&hint.title)
    );
    for (k, (col, pts)) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let path: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
        let _ = writeln!(
            s,
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>",
            path.join(" ")
        );
        for &(x, y) in pts {
            let _ = writeln!(s, "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2.5\" fill=\"{color}\"/>", px(x), py(y));
        }
        let mut label = table.columns[*col].clone();
        if hint.log_log {
            if let Some(slope) = log_log_slope(pts) {
                let _ = write!(label, " (slope {slope:.3})");
            }
        }
        let _ = writeln!(
            s,
            "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"12\" fill=\"{color}\">{}</text>",
            MARGIN + 8.0,
            MARGIN + 16.0 + 16.0 * k as f64,
            escape(&label)
        );
    }
    s.push_str("</svg>\n");
    Some(s)
}

/// One SVG per plottable table; tables without drawable points produce a
/// warning instead of a file.
pub fn emit_plots(report: &RunReport, out_dir: &Path) -> Result<(Vec<PathBuf>, Vec<String>)> {
    ensure_dir(out_dir)?;
    let mut files = Vec::new();
    let mut warnings = Vec::new();
    for t in report.tables.iter().filter(|t| t.plot.is_some()) {
        match render_svg(t) {
            Some(svg) => {
                let p = out_dir.join(format!("{}-{}.svg", report.stem(), slug(&t.name)));
                write_file(&p, &svg)?;
                files.push(p);
            }
            None => warnings.push(format!("table '{}' has no drawable points; plot skipped", t.name)),
        }
    }
    Ok((files, warnings))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_use_seventeen_digits_and_nan_is_null() {
        let v = serde_json::json!({"b": 0.1, "a": [1, f64::NAN]});
        let s = to_json_string(&v);
        assert_eq!(s, "{\n  \"a\": [\n    1,\n    null\n  ],\n  \"b\": 1.0000000000000001e-1\n}\n");
    }

    #[test]
    fn slope_of_a_power_law() {
        let pts: Vec<(f64, f64)> = [250.0, 500.0, 1000.0].iter().map(|&n: &f64| (n, 3.0 * n.powi(-4))).collect();
        assert!((log_log_slope(&pts).unwrap() + 4.0).abs() < 1e-12);
    }

    #[test]
    fn empty_table_renders_nothing() {
        let t = Table::new("empty", &["x", "y"]).with_plot("empty", 0, &[1], false);
        assert!(render_svg(&t).is_none());
    }

    #[test]
    fn csv_quotes_text_with_commas() {
        let mut t = Table::new("t", &["id", "v"]);
        t.push(vec!["a,b".into(), 2.0.into()]);
        assert_eq!(t.to_csv(), "id,v\n\"a,b\",2.0000000000000000e0\n");
    }
}
