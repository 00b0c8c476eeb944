use serde::Serialize;

use super::graph::{bits, QueryError, QueryGraph, QueryVertex};
use crate::encoding::CandidateTable;

/// DFS order over the query vertices, starting at an anchor edge.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MatchingOrder {
    pub anchor_edge: (QueryVertex, QueryVertex),
    pub order: Vec<QueryVertex>,
}

impl MatchingOrder {
    /// Each vertex after the anchor has an earlier neighbor.
    pub fn is_prefix_connected(&self, q: &QueryGraph) -> bool {
        let mut placed = 0u32;
        self.order.iter().enumerate().all(|(i, &u)| {
            let ok = i < 2 || q.neighbor_mask(u) & placed != 0;
            placed |= 1 << u;
            ok
        }) && self.order.len() == q.len()
            && placed == q.full_mask()
            && q.adjacent(self.order[0], self.order[1])
    }
}

/// `a` is more selective than `b`: fewer candidates per unit of degree, then
/// higher degree, then lower id.
fn more_selective(q: &QueryGraph, counts: &[usize], a: QueryVertex, b: QueryVertex) -> bool {
    let (ca, da) = (counts[a] as u128, q.degree(a) as u128);
    let (cb, db) = (counts[b] as u128, q.degree(b) as u128);
    let (lhs, rhs) = (ca * db, cb * da);
    if lhs != rhs {
        return lhs < rhs;
    }
    if da != db {
        return da > db;
    }
    a < b
}

/// Greedy connected order from `start`. Vertices inside `first` are all
/// placed before any outside it; `first` must contain `start` and induce a
/// connected subgraph.
pub fn greedy_order(
    q: &QueryGraph,
    start: (QueryVertex, QueryVertex),
    first: u32,
    counts: &[usize],
) -> Vec<QueryVertex> {
    let mut order = vec![start.0, start.1];
    let mut placed = (1u32 << start.0) | (1 << start.1);
    while order.len() < q.len() {
        let frontier = bits(q.full_mask() & !placed).filter(|&u| q.neighbor_mask(u) & placed != 0);
        let preferred: Vec<QueryVertex> = frontier.collect();
        let pool: Vec<QueryVertex> = if preferred.iter().any(|&u| first >> u & 1 == 1) {
            preferred.into_iter().filter(|&u| first >> u & 1 == 1).collect()
        } else {
            preferred
        };
        let mut best = pool[0];
        for &u in &pool[1..] {
            if more_selective(q, counts, u, best) {
                best = u;
            }
        }
        order.push(best);
        placed |= 1 << best;
    }
    order
}

pub fn generate_matching_order(
    q: &QueryGraph,
    anchor: (QueryVertex, QueryVertex),
    table: &CandidateTable,
) -> Result<MatchingOrder, QueryError> {
    let counts: Vec<usize> = (0..q.len()).map(|u| table.column(u).len()).collect();
    matching_order_from_counts(q, anchor, &counts)
}

pub fn matching_order_from_counts(
    q: &QueryGraph,
    anchor: (QueryVertex, QueryVertex),
    counts: &[usize],
) -> Result<MatchingOrder, QueryError> {
    let (a, b) = anchor;
    if a >= q.len() || b >= q.len() || !q.adjacent(a, b) {
        return Err(QueryError::InvalidAnchor(a, b));
    }
    Ok(MatchingOrder { anchor_edge: anchor, order: greedy_order(q, anchor, 0, counts) })
}
