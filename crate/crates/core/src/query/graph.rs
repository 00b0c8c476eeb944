use serde::Serialize;
use thiserror::Error;

use crate::graph::Label;

/// Index of a query vertex.
pub type QueryVertex = usize;

/// Hard limit imposed by the `u32` adjacency masks.
pub const MAX_QUERY_VERTICES: usize = 32;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QueryError {
    #[error("query must have between 2 and {MAX_QUERY_VERTICES} vertices, got {0}")]
    Size(usize),
    #[error("query is not connected")]
    Disconnected,
    #[error("self-loop on query vertex {0}")]
    SelfLoop(QueryVertex),
    #[error("duplicate query edge ({0}, {1})")]
    DuplicateEdge(QueryVertex, QueryVertex),
    #[error("query edge references unknown vertex {0}")]
    UnknownVertex(QueryVertex),
    #[error("({0}, {1}) is not a query edge")]
    InvalidAnchor(QueryVertex, QueryVertex),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct QueryEdge {
    pub a: QueryVertex,
    pub b: QueryVertex,
    pub label: Option<Label>,
}

/// Connected, simple, undirected labeled pattern. Edges keep their input
/// order as ids and are stored with `a < b`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryGraph {
    labels: Vec<Label>,
    edges: Vec<QueryEdge>,
    adj: Vec<u32>,
    edge_ids: Vec<Option<usize>>,
}

impl QueryGraph {
    pub fn new(
        labels: Vec<Label>,
        edges: &[(QueryVertex, QueryVertex, Option<Label>)],
    ) -> Result<Self, QueryError> {
        let n = labels.len();
        if !(2..=MAX_QUERY_VERTICES).contains(&n) {
            return Err(QueryError::Size(n));
        }
        let mut adj = vec![0u32; n];
        let mut edge_ids = vec![None; n * n];
        let mut out = Vec::with_capacity(edges.len());
        for &(x, y, label) in edges {
            for z in [x, y] {
                if z >= n {
                    return Err(QueryError::UnknownVertex(z));
                }
            }
            if x == y {
                return Err(QueryError::SelfLoop(x));
            }
            let (a, b) = (x.min(y), x.max(y));
            if edge_ids[a * n + b].is_some() {
                return Err(QueryError::DuplicateEdge(a, b));
            }
            edge_ids[a * n + b] = Some(out.len());
            edge_ids[b * n + a] = Some(out.len());
            adj[a] |= 1 << b;
            adj[b] |= 1 << a;
            out.push(QueryEdge { a, b, label });
        }
        let q = QueryGraph { labels, edges: out, adj, edge_ids };
        if !q.is_connected_subset(q.full_mask()) {
            return Err(QueryError::Disconnected);
        }
        Ok(q)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    /// A query always has at least two vertices.
    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn full_mask(&self) -> u32 {
        if self.len() == 32 {
            u32::MAX
        } else {
            (1u32 << self.len()) - 1
        }
    }

    pub fn label(&self, u: QueryVertex) -> Label {
        self.labels[u]
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn edges(&self) -> &[QueryEdge] {
        &self.edges
    }

    pub fn edge(&self, id: usize) -> QueryEdge {
        self.edges[id]
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edge_id(&self, x: QueryVertex, y: QueryVertex) -> Option<usize> {
        self.edge_ids[x * self.len() + y]
    }

    pub fn edge_label(&self, x: QueryVertex, y: QueryVertex) -> Option<Label> {
        self.edge_id(x, y).and_then(|e| self.edges[e].label)
    }

    pub fn adjacent(&self, x: QueryVertex, y: QueryVertex) -> bool {
        self.adj[x] >> y & 1 == 1
    }

    pub fn neighbor_mask(&self, u: QueryVertex) -> u32 {
        self.adj[u]
    }

    pub fn neighbors(&self, u: QueryVertex) -> impl Iterator<Item = QueryVertex> + '_ {
        bits(self.adj[u])
    }

    pub fn degree(&self, u: QueryVertex) -> usize {
        self.adj[u].count_ones() as usize
    }

    pub fn max_degree(&self) -> usize {
        (0..self.len()).map(|u| self.degree(u)).max().unwrap_or(0)
    }

    pub fn avg_degree(&self) -> f64 {
        2.0 * self.edges.len() as f64 / self.len() as f64
    }

    pub fn is_tree(&self) -> bool {
        self.edges.len() + 1 == self.len()
    }

    /// Sorted labels of all neighbors of `u`.
    pub fn neighbor_labels(&self, u: QueryVertex) -> Vec<Label> {
        let mut out: Vec<Label> = self.neighbors(u).map(|w| self.labels[w]).collect();
        out.sort_unstable();
        out
    }

    /// Distinct vertex labels, ascending.
    pub fn distinct_labels(&self) -> Vec<Label> {
        let mut out = self.labels.clone();
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn is_connected_subset(&self, mask: u32) -> bool {
        if mask == 0 {
            return true;
        }
        let mut seen = 1u32 << mask.trailing_zeros();
        let mut frontier = seen;
        while frontier != 0 {
            let u = frontier.trailing_zeros() as usize;
            frontier &= frontier - 1;
            let next = self.adj[u] & mask & !seen;
            seen |= next;
            frontier |= next;
        }
        seen == mask
    }
}

/// Set-bit positions of a mask, ascending.
pub fn bits(mut mask: u32) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        (mask != 0).then(|| {
            let i = mask.trailing_zeros() as usize;
            mask &= mask - 1;
            i
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert_eq!(QueryGraph::new(vec![1], &[]).unwrap_err(), QueryError::Size(1));
        assert_eq!(
            QueryGraph::new(vec![1, 1, 1], &[(0, 1, None)]).unwrap_err(),
            QueryError::Disconnected
        );
        assert_eq!(
            QueryGraph::new(vec![1, 1], &[(0, 1, None), (1, 0, None)]).unwrap_err(),
            QueryError::DuplicateEdge(0, 1)
        );
        assert_eq!(QueryGraph::new(vec![1, 1], &[(0, 0, None)]).unwrap_err(), QueryError::SelfLoop(0));
        assert_eq!(QueryGraph::new(vec![1, 1], &[(0, 2, None)]).unwrap_err(), QueryError::UnknownVertex(2));
    }

    #[test]
    fn accessors() {
        let q = QueryGraph::new(vec![1, 2, 2, 3], &[(0, 1, None), (2, 0, None), (1, 2, None), (1, 3, Some(9))]).unwrap();
        assert_eq!(q.edge_id(0, 2), Some(1));
        assert_eq!(q.edge(1), QueryEdge { a: 0, b: 2, label: None });
        assert_eq!(q.edge_label(3, 1), Some(9));
        assert_eq!(q.degree(1), 3);
        assert_eq!(q.neighbor_labels(1), vec![1, 2, 3]);
        assert!(!q.is_tree());
        assert!(q.is_connected_subset(0b0111));
        assert!(!q.is_connected_subset(0b1101));
        assert_eq!(bits(0b1010).collect::<Vec<_>>(), vec![1, 3]);
    }
}
