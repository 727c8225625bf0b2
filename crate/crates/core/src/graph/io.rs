//! Edge-list text format.
//!
//! ```text
//! p=4
//! 0	1	0.73
//! 2	1
//! ```
//!
//! The first non-comment line is `p=<count>`; every following line is
//! `i<TAB>j[<TAB>weight]` with 0-based indices. A PDAG writes each undirected
//! edge as the two lines `i j` and `j i`. Lines starting with `#` are
//! comments, and an `omega=` line (used by SEM files) is passed through to the
//! caller untouched.

use std::fmt::Write as _;

use super::{Dag, GraphError, Pdag};

/// Parsed contents of an edge-list file.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeList {
    pub p: usize,
    pub edges: Vec<(usize, usize, Option<f64>)>,
    /// Raw value of an `omega=` line, if present.
    pub omega: Option<String>,
}

pub fn parse_edge_list(text: &str) -> Result<EdgeList, GraphError> {
    let mut p = None;
    let mut edges = Vec::new();
    let mut omega = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |msg: String| GraphError::Parse { line: line_no, msg };
        if p.is_none() {
            let value = line
                .strip_prefix("p=")
                .ok_or_else(|| err(format!("expected `p=<count>`, found `{line}`")))?;
            p = Some(
                value
                    .trim()
                    .parse::<usize>()
                    .map_err(|e| err(format!("bad node count: {e}")))?,
            );
            continue;
        }
        if let Some(rest) = line.strip_prefix("omega=") {
            omega = Some(rest.trim().to_string());
            continue;
        }
        let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
        if !(2..=3).contains(&fields.len()) {
            return Err(err(format!(
                "expected 2 or 3 tab-separated fields, found {}",
                fields.len()
            )));
        }
        let node = |s: &str| {
            s.parse::<usize>()
                .map_err(|e| err(format!("bad node index `{s}`: {e}")))
        };
        let i = node(fields[0])?;
        let j = node(fields[1])?;
        let w = match fields.get(2) {
            Some(s) => Some(
                s.parse::<f64>()
                    .map_err(|e| err(format!("bad weight `{s}`: {e}")))?,
            ),
            None => None,
        };
        edges.push((i, j, w));
    }
    let p = p.ok_or(GraphError::Parse {
        line: 0,
        msg: "missing `p=<count>` header".into(),
    })?;
    Ok(EdgeList { p, edges, omega })
}

impl EdgeList {
    pub fn to_dag(&self) -> Result<Dag, GraphError> {
        Dag::new(self.p, self.edges.iter().map(|&(i, j, _)| (i, j)))
    }

    /// Reads the edges as a PDAG: a pair listed in both directions is undirected.
    pub fn to_pdag(&self) -> Result<Pdag, GraphError> {
        let pairs: std::collections::BTreeSet<(usize, usize)> =
            self.edges.iter().map(|&(i, j, _)| (i, j)).collect();
        if pairs.len() != self.edges.len() {
            let dup = self
                .edges
                .iter()
                .enumerate()
                .find(|(k, e)| self.edges[..*k].iter().any(|f| (f.0, f.1) == (e.0, e.1)))
                .map(|(_, e)| (e.0, e.1))
                .unwrap_or((0, 0));
            return Err(GraphError::DuplicateEdge(dup.0, dup.1));
        }
        let directed = pairs
            .iter()
            .copied()
            .filter(|&(i, j)| !pairs.contains(&(j, i)));
        let undirected = pairs
            .iter()
            .copied()
            .filter(|&(i, j)| i < j && pairs.contains(&(j, i)));
        Pdag::new(self.p, directed, undirected)
    }
}

pub fn write_dag(dag: &Dag) -> String {
    let mut out = format!("p={}\n", dag.p());
    for (i, j) in dag.edges() {
        let _ = writeln!(out, "{i}\t{j}");
    }
    out
}

pub fn write_pdag(g: &Pdag) -> String {
    let mut lines: Vec<(usize, usize)> = g.directed_edges().collect();
    for (i, j) in g.undirected_edges() {
        lines.push((i, j));
        lines.push((j, i));
    }
    lines.sort_unstable();
    let mut out = format!("p={}\n", g.p());
    for (i, j) in lines {
        let _ = writeln!(out, "{i}\t{j}");
    }
    out
}
