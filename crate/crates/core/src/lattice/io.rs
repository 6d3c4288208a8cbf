//! Line-oriented text format for graphs and lattices.
//!
//! ```text
//! # comment
//! vertices <n>
//! dim <d>                                         (lattice only)
//! halfedge <id> <origin> <terminus> <inverse> [<v_1> … <v_d>]
//! position <base vertex> <x_1> … <x_d>            (lattice only)
//! period <row entries>                            (lattice only, d rows)
//! ```
//!
//! Writers emit records in that order with half-edges and positions by
//! ascending id, so write-parse-write is byte-stable. A graph reader
//! accepts lattice files and ignores the extra fields.

use std::fmt::Write as _;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::graph::{FiniteGraph, HalfEdge};

use super::{build_custom, CrystalLattice, Realization};

pub fn write_graph(graph: &FiniteGraph) -> String {
    let mut out = String::from("# crystal-fpp graph v1\n");
    writeln!(out, "vertices {}", graph.vertex_count()).unwrap();
    for (id, e) in graph.half_edges().iter().enumerate() {
        writeln!(out, "halfedge {id} {} {} {}", e.origin, e.terminus, e.inverse).unwrap();
    }
    out
}

pub fn write_lattice(lattice: &CrystalLattice, realization: &Realization) -> String {
    let mut out = String::from("# crystal-fpp lattice v1\n");
    let base = lattice.base();
    writeln!(out, "vertices {}", base.vertex_count()).unwrap();
    writeln!(out, "dim {}", lattice.dim()).unwrap();
    for (id, e) in base.half_edges().iter().enumerate() {
        write!(out, "halfedge {id} {} {} {}", e.origin, e.terminus, e.inverse).unwrap();
        for v in lattice.voltage(id) {
            write!(out, " {v}").unwrap();
        }
        out.push('\n');
    }
    for (u, p) in realization.positions().iter().enumerate() {
        write!(out, "position {u}").unwrap();
        for x in p {
            write!(out, " {x}").unwrap();
        }
        out.push('\n');
    }
    let period = realization.period();
    for r in 0..period.nrows() {
        out.push_str("period");
        for c in 0..period.ncols() {
            write!(out, " {}", period[(r, c)]).unwrap();
        }
        out.push('\n');
    }
    out
}

#[derive(Default)]
struct Records {
    vertices: Option<usize>,
    dim: Option<usize>,
    half_edges: Vec<(usize, HalfEdge, Vec<i64>, usize)>,
    positions: Vec<(usize, Vec<f64>, usize)>,
    period_rows: Vec<Vec<f64>>,
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

fn field<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| parse_err(line, format!("missing {what}")))?;
    tok.parse().map_err(|_| parse_err(line, format!("bad {what} `{tok}`")))
}

fn read_records(text: &str) -> Result<Records> {
    let mut rec = Records::default();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut toks = content.split_whitespace();
        let key = toks.next().unwrap_or_default();
        match key {
            "vertices" => rec.vertices = Some(field(toks.next(), line, "vertex count")?),
            "dim" => rec.dim = Some(field(toks.next(), line, "dimension")?),
            "halfedge" => {
                let id = field(toks.next(), line, "half-edge id")?;
                let origin = field(toks.next(), line, "origin")?;
                let terminus = field(toks.next(), line, "terminus")?;
                let inverse = field(toks.next(), line, "inverse")?;
                let voltage = toks.map(|t| t.parse().map_err(|_| parse_err(line, format!("bad voltage `{t}`")))).collect::<Result<Vec<i64>>>()?;
                rec.half_edges.push((id, HalfEdge { origin, terminus, inverse }, voltage, line));
                continue;
            }
            "position" => {
                let u = field(toks.next(), line, "base vertex")?;
                let p = toks.map(|t| t.parse().map_err(|_| parse_err(line, format!("bad coordinate `{t}`")))).collect::<Result<Vec<f64>>>()?;
                rec.positions.push((u, p, line));
                continue;
            }
            "period" => {
                let row = toks.map(|t| t.parse().map_err(|_| parse_err(line, format!("bad period entry `{t}`")))).collect::<Result<Vec<f64>>>()?;
                rec.period_rows.push(row);
                continue;
            }
            other => return Err(parse_err(line, format!("unknown record `{other}`"))),
        }
        if let Some(extra) = toks.next() {
            return Err(parse_err(line, format!("unexpected trailing field `{extra}`")));
        }
    }
    rec.half_edges.sort_by_key(|h| h.0);
    for (k, h) in rec.half_edges.iter().enumerate() {
        if h.0 != k {
            return Err(parse_err(h.3, format!("half-edge ids must be 0..m without gaps; expected {k}, found {}", h.0)));
        }
    }
    Ok(rec)
}

pub fn parse_graph(text: &str) -> Result<FiniteGraph> {
    let rec = read_records(text)?;
    let n = rec.vertices.ok_or_else(|| parse_err(0, "missing `vertices` record"))?;
    FiniteGraph::from_half_edges(n, rec.half_edges.into_iter().map(|h| h.1).collect())
}

pub fn parse_lattice(text: &str) -> Result<(CrystalLattice, Realization)> {
    let rec = read_records(text)?;
    let n = rec.vertices.ok_or_else(|| parse_err(0, "missing `vertices` record"))?;
    let d = rec.dim.ok_or_else(|| parse_err(0, "missing `dim` record"))?;
    for h in &rec.half_edges {
        if h.2.len() != d {
            return Err(parse_err(h.3, format!("voltage has {} components, dim is {d}", h.2.len())));
        }
    }
    let mut positions = vec![None; n];
    for (u, p, line) in rec.positions {
        if u >= n {
            return Err(parse_err(line, format!("position for unknown base vertex {u}")));
        }
        if p.len() != d {
            return Err(parse_err(line, format!("position has {} coordinates, dim is {d}", p.len())));
        }
        positions[u] = Some(p);
    }
    let positions = positions
        .into_iter()
        .enumerate()
        .map(|(u, p)| p.ok_or_else(|| parse_err(0, format!("missing position for base vertex {u}"))))
        .collect::<Result<Vec<_>>>()?;
    if rec.period_rows.len() != d || rec.period_rows.iter().any(|r| r.len() != d) {
        return Err(parse_err(0, format!("period must have {d} rows of {d} entries")));
    }
    let period = DMatrix::from_fn(d, d, |r, c| rec.period_rows[r][c]);
    let voltages = rec.half_edges.iter().map(|h| h.2.clone()).collect();
    let base = FiniteGraph::from_half_edges(n, rec.half_edges.into_iter().map(|h| h.1).collect())?;
    build_custom(base, voltages, positions, period)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::build_preset;

    #[test]
    fn presets_round_trip() {
        for name in ["cubic2", "cubic3", "triangular", "honeycomb", "honeycomb-shifted", "diamond"] {
            let (l, r) = build_preset(name).unwrap();
            let text = write_lattice(&l, &r);
            let (l2, r2) = parse_lattice(&text).unwrap();
            assert_eq!((&l, &r), (&l2, &r2), "{name}");
            assert_eq!(write_lattice(&l2, &r2), text);
            assert_eq!(parse_graph(&text).unwrap(), *l.base());
            assert_eq!(parse_graph(&write_graph(l.base())).unwrap(), *l.base());
        }
    }

    #[test]
    fn diagnostics_carry_line_numbers() {
        let text = "vertices 1\ndim 1\nhalfedge 0 0 0 1 1\nhalfedge 1 0 0 0 x\n";
        assert_eq!(parse_lattice(text).unwrap_err(), Error::Parse { line: 4, message: "bad voltage `x`".into() });
        let text = "vertices 1\nedges 3\n";
        assert!(matches!(parse_graph(text), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn missing_period_is_reported() {
        let text = "vertices 1\ndim 1\nhalfedge 0 0 0 1 1\nhalfedge 1 0 0 0 -1\nposition 0 0\n";
        assert!(matches!(parse_lattice(text), Err(Error::Parse { .. })));
    }
}
