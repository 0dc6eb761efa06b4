//! Plain-text graph files.
//!
//! * edge list: one whitespace-separated, zero-indexed pair per line; blank
//!   lines and `#` comments are ignored.
//! * features: one comma-separated row of reals per node, row `i` = node `i`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{Graph, GraphError, Result};
use crate::linalg::DenseMatrix;

fn io_err(path: &Path, source: std::io::Error) -> GraphError {
    GraphError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn parse_err(label: &str, line: usize, message: impl Into<String>) -> GraphError {
    GraphError::Parse {
        path: label.to_string(),
        line,
        message: message.into(),
    }
}

pub fn parse_edge_list(reader: impl BufRead, label: &str) -> Result<Vec<(usize, usize)>> {
    let mut pairs = Vec::new();
    for (k, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| io_err(Path::new(label), e))?;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let mut it = body.split_whitespace();
        let mut next_id = || -> Result<usize> {
            let tok = it
                .next()
                .ok_or_else(|| parse_err(label, k + 1, "expected two node ids"))?;
            tok.parse()
                .map_err(|_| parse_err(label, k + 1, format!("invalid node id '{tok}'")))
        };
        let (i, j) = (next_id()?, next_id()?);
        if it.next().is_some() {
            return Err(parse_err(label, k + 1, "more than two fields"));
        }
        pairs.push((i, j));
    }
    Ok(pairs)
}

pub fn parse_features(reader: impl BufRead, label: &str) -> Result<DenseMatrix> {
    let mut data = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (k, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| io_err(Path::new(label), e))?;
        let body = line.trim();
        if body.is_empty() {
            continue;
        }
        let before = data.len();
        for tok in body.split(',') {
            let v: f64 = tok
                .trim()
                .parse()
                .map_err(|_| parse_err(label, k + 1, format!("invalid number '{tok}'")))?;
            if !v.is_finite() {
                return Err(parse_err(label, k + 1, "non-finite value"));
            }
            data.push(v);
        }
        let width = data.len() - before;
        match cols {
            None => cols = Some(width),
            Some(c) if c != width => {
                return Err(parse_err(label, k + 1, format!("row has {width} values, expected {c}")))
            }
            _ => {}
        }
        rows += 1;
    }
    Ok(DenseMatrix::new(rows, cols.unwrap_or(0), data)?)
}

pub fn read_edge_list(path: &Path) -> Result<Vec<(usize, usize)>> {
    let f = File::open(path).map_err(|e| io_err(path, e))?;
    parse_edge_list(BufReader::new(f), &path.display().to_string())
}

pub fn read_features(path: &Path) -> Result<DenseMatrix> {
    let f = File::open(path).map_err(|e| io_err(path, e))?;
    parse_features(BufReader::new(f), &path.display().to_string())
}

/// Loads a graph. The node count is the feature row count when features are
/// given, otherwise `nodes` or one past the largest id in the edge list.
pub fn load_graph(edges: &Path, features: Option<&Path>, nodes: Option<usize>) -> Result<Graph> {
    let pairs = read_edge_list(edges)?;
    let x = features.map(read_features).transpose()?;
    let max_id = pairs.iter().map(|&(i, j)| i.max(j) + 1).max().unwrap_or(0);
    let n = x.as_ref().map(|x| x.rows()).or(nodes).unwrap_or(max_id);
    Graph::from_edge_list(&pairs, n, x)
}

pub fn write_edge_list(path: &Path, g: &Graph) -> Result<()> {
    let f = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(f);
    let mut body = || -> std::io::Result<()> {
        writeln!(w, "# {} nodes, {} undirected edges", g.n(), g.edge_count())?;
        for (i, j) in g.edges() {
            writeln!(w, "{i} {j}")?;
        }
        w.flush()
    };
    body().map_err(|e| io_err(path, e))
}

pub fn write_features(path: &Path, x: &DenseMatrix) -> Result<()> {
    let f = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(f);
    let mut body = || -> std::io::Result<()> {
        for i in 0..x.rows() {
            let row: Vec<String> = x.row(i).iter().map(|v| v.to_string()).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        w.flush()
    };
    body().map_err(|e| io_err(path, e))
}
