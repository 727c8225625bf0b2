//! Text formats for models and sample matrices.
//!
//! A model file is the weighted edge-list format followed by one line
//! `omega=<v0>,<v1>,...`. Sample matrices are CSV with a header row of node
//! names (`X0..X{p-1}` when written by this crate).

use std::fmt::Write as _;
use std::io::{Read, Write};

use nalgebra::DMatrix;
use thiserror::Error;

use super::{SemError, SemModel};
use crate::graph::io::parse_edge_list;
use crate::graph::GraphError;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Sem(#[from] SemError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Invalid(String),
}

pub fn write_sem(m: &SemModel) -> String {
    let mut out = format!("p={}\n", m.p());
    for (i, j) in m.dag().edges() {
        let _ = writeln!(out, "{i}\t{j}\t{}", m.weights()[(i, j)]);
    }
    let omega: Vec<String> = m.omega().iter().map(|v| v.to_string()).collect();
    let _ = writeln!(out, "omega={}", omega.join(","));
    out
}

pub fn parse_sem(text: &str) -> Result<SemModel, FormatError> {
    let list = parse_edge_list(text)?;
    let omega_line = list
        .omega
        .as_deref()
        .ok_or_else(|| FormatError::Invalid("missing `omega=` line".into()))?;
    let omega = omega_line
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| FormatError::Invalid(format!("bad omega entry `{s}`: {e}")))
        })
        .collect::<Result<Vec<f64>, _>>()?;
    if omega.len() != list.p {
        return Err(FormatError::Invalid(format!(
            "omega has {} entries but p = {}",
            omega.len(),
            list.p
        )));
    }
    let edges = list
        .edges
        .iter()
        .map(|&(i, j, w)| {
            w.map(|w| (i, j, w))
                .ok_or_else(|| FormatError::Invalid(format!("edge {i} -> {j} has no weight")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SemModel::from_edges(list.p, edges, omega)?)
}

pub fn default_header(p: usize) -> Vec<String> {
    (0..p).map(|j| format!("X{j}")).collect()
}

pub fn write_samples_csv<W: Write>(
    x: &DMatrix<f64>,
    header: &[String],
    out: W,
) -> Result<(), FormatError> {
    if header.len() != x.ncols() {
        return Err(FormatError::Invalid(format!(
            "header has {} names for {} columns",
            header.len(),
            x.ncols()
        )));
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    let mut row = Vec::with_capacity(x.ncols());
    for r in 0..x.nrows() {
        row.clear();
        row.extend((0..x.ncols()).map(|c| x[(r, c)].to_string()));
        w.write_record(&row)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Reads a CSV with a header row into `(names, n × p matrix)`.
pub fn read_samples_csv<R: Read>(input: R) -> Result<(Vec<String>, DMatrix<f64>), FormatError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if header.is_empty() {
        return Err(FormatError::Invalid("empty header row".into()));
    }
    let p = header.len();
    let mut values = Vec::new();
    let mut n = 0;
    for (r, rec) in reader.records().enumerate() {
        let rec = rec?;
        if rec.len() != p {
            return Err(FormatError::Invalid(format!(
                "row {} has {} fields, expected {p}",
                r + 1,
                rec.len()
            )));
        }
        for (c, field) in rec.iter().enumerate() {
            let v = field.trim().parse::<f64>().map_err(|e| {
                FormatError::Invalid(format!("row {}, column {}: {e}", r + 1, header[c]))
            })?;
            values.push(v);
        }
        n += 1;
    }
    Ok((header, DMatrix::from_row_slice(n, p, &values)))
}
