//! Text formats: metric files, per-node JSON-lines reports and whitespace
//! separated tables.
//!
//! A metric file looks like
//!
//! ```text
//! # hyperflow metric
//! n 6 dr 0.05 nodes 300
//! r a b alpha beta
//! 0.025 1 0.02500260... 0 0
//! ...
//! ```
//!
//! `a` and `b` are for readers; the parser rebuilds the metric from the
//! `alpha`/`beta` columns, which round-trip exactly. `r` is checked against
//! the grid.

use std::fmt::Write as _;

use serde::Serialize;
use serde_json::json;

use crate::error::FormatError;
use crate::flow::FlowTrace;
use crate::geometry::{CurvatureField, HyperbolicityReport, WarpedMetric};
use crate::grid::RadialGrid;

pub const METRIC_MAGIC: &str = "# hyperflow metric";
const METRIC_COLUMNS: [&str; 5] = ["r", "a", "b", "alpha", "beta"];

pub fn write_metric(m: &WarpedMetric) -> String {
    let g = m.grid();
    let mut out = String::with_capacity(64 * (m.len() + 3));
    let _ = writeln!(out, "{METRIC_MAGIC}");
    let _ = writeln!(out, "n {} dr {:?} nodes {}", m.dimension(), g.spacing(), g.len());
    let _ = writeln!(out, "{}", METRIC_COLUMNS.join(" "));
    for i in 0..m.len() {
        let _ = writeln!(out, "{:?} {:?} {:?} {:?} {:?}", g.r(i), m.a(i), m.b(i), m.alpha()[i], m.beta()[i]);
    }
    out
}

fn perr(line: usize, msg: impl Into<String>) -> FormatError {
    FormatError::Parse { line, msg: msg.into() }
}

fn num<T: std::str::FromStr>(tok: Option<&str>, what: &str, line: usize) -> Result<T, FormatError> {
    let tok = tok.ok_or_else(|| perr(line, format!("missing {what}")))?;
    tok.parse().map_err(|_| perr(line, format!("bad {what} '{tok}'")))
}

pub fn parse_metric(text: &str) -> Result<WarpedMetric, FormatError> {
    let mut lines = text.lines().enumerate().map(|(k, l)| (k + 1, l.trim())).filter(|(_, l)| !l.is_empty());
    match lines.next() {
        Some((_, l)) if l == METRIC_MAGIC => {}
        Some((k, _)) => return Err(perr(k, "expected metric header")),
        None => return Err(perr(0, "empty input")),
    }
    let (hk, header) = lines.next().ok_or_else(|| perr(1, "missing n/dr/nodes line"))?;
    let mut t = header.split_whitespace();
    let mut n = None;
    let mut dr = None;
    let mut nodes = None;
    while let Some(key) = t.next() {
        match key {
            "n" => n = Some(num::<usize>(t.next(), "n", hk)?),
            "dr" => dr = Some(num::<f64>(t.next(), "dr", hk)?),
            "nodes" => nodes = Some(num::<usize>(t.next(), "nodes", hk)?),
            other => return Err(perr(hk, format!("unknown header key '{other}'"))),
        }
    }
    let (n, dr, nodes) = match (n, dr, nodes) {
        (Some(n), Some(dr), Some(c)) => (n, dr, c),
        _ => return Err(perr(hk, "header needs n, dr and nodes")),
    };
    let grid = RadialGrid::new(nodes, dr)?;
    let (ck, cols) = lines.next().ok_or_else(|| perr(hk + 1, "missing column line"))?;
    if cols.split_whitespace().ne(METRIC_COLUMNS.iter().copied()) {
        return Err(perr(ck, format!("columns must be '{}'", METRIC_COLUMNS.join(" "))));
    }
    let mut alpha = Vec::with_capacity(nodes);
    let mut beta = Vec::with_capacity(nodes);
    for (k, l) in lines {
        if alpha.len() == nodes {
            return Err(perr(k, format!("more than {nodes} rows")));
        }
        let row: Vec<f64> = l
            .split_whitespace()
            .map(|tok| tok.parse::<f64>().map_err(|_| perr(k, format!("bad number '{tok}'"))))
            .collect::<Result<_, _>>()?;
        if row.len() != METRIC_COLUMNS.len() {
            return Err(perr(k, format!("expected {} columns, got {}", METRIC_COLUMNS.len(), row.len())));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(perr(k, "non-finite value"));
        }
        let i = alpha.len();
        let r = grid.r(i);
        if (row[0] - r).abs() > 1e-9 * r.max(1.0) {
            return Err(perr(k, format!("r = {} but node {i} sits at {r}", row[0])));
        }
        alpha.push(row[3]);
        beta.push(row[4]);
    }
    if alpha.len() != nodes {
        return Err(perr(0, format!("expected {nodes} rows, got {}", alpha.len())));
    }
    Ok(WarpedMetric::from_deviation(n, grid, alpha, beta)?)
}

/// One JSON object per node followed by a summary record.
pub fn curvature_records(m: &WarpedMetric, k: &CurvatureField, report: Option<&HyperbolicityReport>) -> String {
    let g = m.grid();
    let mut out = String::new();
    for i in 0..k.len() {
        let rec = json!({
            "node": i,
            "r": g.r(i),
            "k_rad": k.k_rad[i],
            "k_sph": k.k_sph[i],
            "ric_rad": k.ric_rad[i],
            "ric_tan": k.ric_tan[i],
            "h_norm": k.h_norm[i],
        });
        let _ = writeln!(out, "{rec}");
    }
    let worst = |v: &[f64]| v.iter().fold(0.0_f64, |a, &b| a.max(b.abs()));
    let summary = json!({
        "summary": true,
        "n": m.dimension(),
        "dr": g.spacing(),
        "nodes": g.len(),
        "max_k_rad_dev": worst(&k.k_rad_dev),
        "max_k_sph_dev": worst(&k.k_sph_dev),
        "max_h_norm": worst(&k.h_norm),
        "hyperbolicity": report,
    });
    let _ = writeln!(out, "{summary}");
    out
}

/// Serializes any record as a single JSON line.
pub fn json_line<T: Serialize>(v: &T) -> Result<String, FormatError> {
    Ok(serde_json::to_string(v)? + "\n")
}

/// Named columns of numbers, written as a `#`-prefixed header line and one
/// whitespace separated row per entry.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("# {}\n", self.columns.join(" "));
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
            out.push_str(&cells.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, FormatError> {
        let mut lines = text.lines().enumerate().map(|(k, l)| (k + 1, l.trim())).filter(|(_, l)| !l.is_empty());
        let (hk, head) = lines.next().ok_or_else(|| perr(0, "empty table"))?;
        let head = head.strip_prefix('#').ok_or_else(|| perr(hk, "header must start with '#'"))?;
        let columns: Vec<String> = head.split_whitespace().map(str::to_string).collect();
        if columns.is_empty() {
            return Err(perr(hk, "no columns"));
        }
        let mut rows = Vec::new();
        for (k, l) in lines {
            let row: Vec<f64> = l
                .split_whitespace()
                .map(|tok| tok.parse::<f64>().map_err(|_| perr(k, format!("bad number '{tok}'"))))
                .collect::<Result<_, _>>()?;
            if row.len() != columns.len() {
                return Err(perr(k, format!("expected {} columns, got {}", columns.len(), row.len())));
            }
            rows.push(row);
        }
        Ok(Self { columns, rows })
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }
}

/// t, sup|h|, eps_metric, eps_curv, eps_order, dt per snapshot.
pub fn trace_table(trace: &FlowTrace) -> Table {
    let mut t = Table::new(&["t", "sup_h", "eps_metric", "eps_curv", "eps_order", "dt"]);
    for (e, (_, h)) in trace.eps_series.iter().zip(&trace.sup_h_series) {
        t.push(vec![e.t, *h, e.eps_metric, e.eps_curv, e.eps_order, e.dt]);
    }
    t
}
