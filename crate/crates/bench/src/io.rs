//! Text formats for graphs, queries and update streams.
//!
//! Graphs and queries: `v <id> <label>` and `e <u> <v> [<edge-label>]`
//! lines, ids 0-based. Streams: batches separated by blank lines, each line
//! `+ <u> <v> [<edge-label>]` or `- <u> <v>`. Lines starting with `#` are
//! ignored.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use bdsm_core::graph::{BatchError, EdgeUpdate, Label, LabeledGraph, UpdateBatch, UpdateOp, VertexId};
use bdsm_core::query::{QueryError, QueryGraph};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: {source}")]
    Batch { line: usize, source: BatchError },
    #[error(transparent)]
    Query(#[from] QueryError),
    #[error("query vertex ids must be 0..n without gaps")]
    SparseQueryIds,
}

/// Parsed `v`/`e` records.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GraphRecords {
    pub vertices: Vec<(VertexId, Label)>,
    pub edges: Vec<(VertexId, VertexId, Option<Label>)>,
}

impl GraphRecords {
    pub fn build(&self) -> Result<LabeledGraph, bdsm_core::graph::GraphError> {
        LabeledGraph::build_from_edges(&self.vertices, &self.edges)
    }

    pub fn from_graph(g: &LabeledGraph) -> Self {
        use bdsm_core::graph::GraphView;
        GraphRecords {
            vertices: g.vertices().map(|v| (v, g.label(v).unwrap())).collect(),
            edges: g.edges().collect(),
        }
    }

    pub fn to_query(&self) -> Result<QueryGraph, FormatError> {
        let mut vs = self.vertices.clone();
        vs.sort_unstable();
        if vs.iter().enumerate().any(|(i, &(v, _))| v as usize != i) {
            return Err(FormatError::SparseQueryIds);
        }
        let edges: Vec<_> = self.edges.iter().map(|&(u, v, l)| (u as usize, v as usize, l)).collect();
        Ok(QueryGraph::new(vs.into_iter().map(|(_, l)| l).collect(), &edges)?)
    }
}

fn number<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T, FormatError> {
    let tok = tok.ok_or_else(|| FormatError::Syntax { line, msg: format!("missing {what}") })?;
    tok.parse().map_err(|_| FormatError::Syntax { line, msg: format!("invalid {what} `{tok}`") })
}

fn optional<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<Option<T>, FormatError> {
    tok.map(|t| number(Some(t), line, what)).transpose()
}

fn no_trailing<'a>(mut toks: impl Iterator<Item = &'a str>, line: usize) -> Result<(), FormatError> {
    match toks.next() {
        Some(t) => Err(FormatError::Syntax { line, msg: format!("unexpected token `{t}`") }),
        None => Ok(()),
    }
}

pub fn parse_graph(text: &str) -> Result<GraphRecords, FormatError> {
    let mut out = GraphRecords::default();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let mut toks = raw.split_whitespace();
        match toks.next() {
            None => {}
            Some(t) if t.starts_with('#') => {}
            Some("v") => {
                out.vertices.push((number(toks.next(), line, "vertex id")?, number(toks.next(), line, "label")?));
                no_trailing(toks, line)?;
            }
            Some("e") => {
                let u = number(toks.next(), line, "endpoint")?;
                let v = number(toks.next(), line, "endpoint")?;
                out.edges.push((u, v, optional(toks.next(), line, "edge label")?));
                no_trailing(toks, line)?;
            }
            Some(t) => return Err(FormatError::Syntax { line, msg: format!("unknown record `{t}`") }),
        }
    }
    Ok(out)
}

pub fn parse_stream(text: &str) -> Result<Vec<UpdateBatch>, FormatError> {
    let mut batches = Vec::new();
    let mut current = Vec::new();
    let mut start = 1;
    let flush = |current: &mut Vec<EdgeUpdate>, batches: &mut Vec<UpdateBatch>, line: usize| -> Result<(), FormatError> {
        if !current.is_empty() {
            let b = UpdateBatch::new(std::mem::take(current)).map_err(|source| FormatError::Batch { line, source })?;
            batches.push(b);
        }
        Ok(())
    };
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let mut toks = raw.split_whitespace();
        let up = match toks.next() {
            None => {
                flush(&mut current, &mut batches, start)?;
                start = line + 1;
                continue;
            }
            Some(t) if t.starts_with('#') => continue,
            Some("+") => {
                let u = number(toks.next(), line, "endpoint")?;
                let v = number(toks.next(), line, "endpoint")?;
                match optional(toks.next(), line, "edge label")? {
                    Some(l) => EdgeUpdate::insert_labeled(u, v, l),
                    None => EdgeUpdate::insert(u, v),
                }
            }
            Some("-") => EdgeUpdate::delete(number(toks.next(), line, "endpoint")?, number(toks.next(), line, "endpoint")?),
            Some(t) => return Err(FormatError::Syntax { line, msg: format!("unknown update `{t}`") }),
        };
        no_trailing(toks, line)?;
        current.push(up);
    }
    flush(&mut current, &mut batches, start)?;
    Ok(batches)
}

pub fn format_graph(records: &GraphRecords) -> String {
    let mut s = String::new();
    for &(v, l) in &records.vertices {
        let _ = writeln!(s, "v {v} {l}");
    }
    for &(u, v, l) in &records.edges {
        match l {
            Some(l) => writeln!(s, "e {u} {v} {l}"),
            None => writeln!(s, "e {u} {v}"),
        }
        .unwrap();
    }
    s
}

pub fn format_query(q: &QueryGraph) -> String {
    format_graph(&GraphRecords {
        vertices: q.labels().iter().enumerate().map(|(u, &l)| (u as VertexId, l)).collect(),
        edges: q.edges().iter().map(|e| (e.a as VertexId, e.b as VertexId, e.label)).collect(),
    })
}

pub fn format_stream(batches: &[UpdateBatch]) -> String {
    let mut s = String::new();
    for (i, b) in batches.iter().enumerate() {
        if i > 0 {
            s.push('\n');
        }
        for up in b {
            match (up.op, up.edge_label) {
                (UpdateOp::Insert, Some(l)) => writeln!(s, "+ {} {} {l}", up.u, up.v),
                (op, _) => writeln!(s, "{} {} {}", op.sign(), up.u, up.v),
            }
            .unwrap();
        }
    }
    s
}

fn read(path: &Path) -> Result<String, FormatError> {
    std::fs::read_to_string(path).map_err(|source| FormatError::Io { path: path.to_owned(), source })
}

pub fn load_graph(path: &Path) -> Result<GraphRecords, FormatError> {
    parse_graph(&read(path)?)
}

/// One query per file.
pub fn load_query(path: &Path) -> Result<QueryGraph, FormatError> {
    parse_graph(&read(path)?)?.to_query()
}

pub fn load_stream(path: &Path) -> Result<Vec<UpdateBatch>, FormatError> {
    parse_stream(&read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graph_round_trip() {
        let text = "# comment\nv 0 1\nv 1 2\nv 2 2\ne 0 1\ne 1 2 7\n";
        let g = parse_graph(text).unwrap();
        assert_eq!(g.edges, vec![(0, 1, None), (1, 2, Some(7))]);
        assert_eq!(parse_graph(&format_graph(&g)).unwrap(), g);
    }

    #[test]
    fn stream_batches() {
        let text = "+ 0 2\n+ 1 4\n- 4 5\n\n\n+ 3 4 9\n";
        let b = parse_stream(text).unwrap();
        assert_eq!(b.len(), 2);
        assert_eq!(b[0].len(), 3);
        assert_eq!(b[1].updates()[0].edge_label, Some(9));
        assert_eq!(parse_stream(&format_stream(&b)).unwrap(), b);
    }

    #[test]
    fn syntax_errors_carry_lines() {
        assert!(matches!(parse_graph("v 0 1\nq 1\n"), Err(FormatError::Syntax { line: 2, .. })));
        assert!(matches!(parse_graph("e 0\n"), Err(FormatError::Syntax { line: 1, .. })));
        assert!(matches!(parse_stream("+ 0 1\n- 1 0\n"), Err(FormatError::Batch { .. })));
        assert!(matches!(parse_stream("+ 0 1 2 3\n"), Err(FormatError::Syntax { .. })));
    }

    #[test]
    fn query_ids_must_be_dense() {
        let r = parse_graph("v 0 1\nv 2 1\ne 0 2\n").unwrap();
        assert!(matches!(r.to_query(), Err(FormatError::SparseQueryIds)));
    }
}
