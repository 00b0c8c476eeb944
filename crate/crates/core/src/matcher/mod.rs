//! Incremental match search for one batch.
//!
//! Negative matches are searched on the pre-batch graph from deleted edges
//! and positive matches on the post-batch graph from inserted edges. A match
//! is reported only from the lowest-order update it contains, so each match
//! is found once per batch.

pub mod intersect;
mod search;

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::time::Instant;

use thiserror::Error;

pub use search::{bits64, Cand, Frame, FrameData, FrameKind, NoHooks, SearchHooks, Searcher, StolenWork};

use crate::encoding::CandidateTable;
use crate::graph::{EdgeUpdate, GraphSnapshot, GraphView, Label, UpdateBatch, UpdateOp, VertexId};
use crate::query::{DegeneratedAutomorphicSubgraph, QueryGraph, QueryPlan, QueryVertex, TaskGroup};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MatchError {
    #[error("search deadline exceeded")]
    DeadlineExceeded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatchConfig {
    pub coalesce: bool,
    /// Join suffixes of degree-one vertices inside coalesced groups.
    pub leaf_join: bool,
    pub deadline: Option<Instant>,
}

impl Default for MatchConfig {
    fn default() -> Self {
        MatchConfig { coalesce: true, leaf_join: true, deadline: None }
    }
}

/// A full match with the order of the update it was found from.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ReportedMatch {
    /// Data vertex per query vertex.
    pub mapping: Vec<VertexId>,
    pub anchor: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IncrementalMatchSet {
    pub positive: Vec<ReportedMatch>,
    pub negative: Vec<ReportedMatch>,
}

impl IncrementalMatchSet {
    pub fn new(mut positive: Vec<ReportedMatch>, mut negative: Vec<ReportedMatch>) -> Self {
        positive.sort_unstable();
        negative.sort_unstable();
        IncrementalMatchSet { positive, negative }
    }

    pub fn is_empty(&self) -> bool {
        self.positive.is_empty() && self.negative.is_empty()
    }

    pub fn positive_set(&self) -> BTreeSet<Vec<VertexId>> {
        self.positive.iter().map(|m| m.mapping.clone()).collect()
    }

    pub fn negative_set(&self) -> BTreeSet<Vec<VertexId>> {
        self.negative.iter().map(|m| m.mapping.clone()).collect()
    }

    /// True if some mapping was reported twice within one sign.
    pub fn has_duplicates(&self) -> bool {
        self.positive_set().len() != self.positive.len() || self.negative_set().len() != self.negative.len()
    }

    /// `+ u0:v1 u1:v5 ...` lines, positives first, each side in canonical order.
    pub fn lines(&self) -> Vec<String> {
        let fmt = |sign: char, m: &ReportedMatch| {
            let mut s = String::new();
            s.push(sign);
            for (u, v) in m.mapping.iter().enumerate() {
                let _ = write!(s, " u{u}:v{v}");
            }
            s
        };
        let mut pos: Vec<_> = self.positive.iter().collect();
        let mut neg: Vec<_> = self.negative.iter().collect();
        pos.sort_by(|a, b| a.mapping.cmp(&b.mapping));
        neg.sort_by(|a, b| a.mapping.cmp(&b.mapping));
        pos.into_iter().map(|m| fmt('+', m)).chain(neg.into_iter().map(|m| fmt('-', m))).collect()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SearchStats {
    /// Candidate generations (DFS node expansions).
    pub visits: u64,
    /// Comparisons spent in candidate intersection.
    pub ops: u64,
    pub matches: u64,
    /// Generations that exceeded the per-expansion intersection ceiling.
    pub over_bound: u64,
}

impl SearchStats {
    pub fn merge(&mut self, other: &SearchStats) {
        self.visits += other.visits;
        self.ops += other.ops;
        self.matches += other.matches;
        self.over_bound += other.over_bound;
    }

    /// Records one generation against `4·dq·dG·(⌈log2 max(dG, Cmax)⌉ + 1)`.
    pub fn record_intersection(&mut self, ops: u64, dq: usize, dg: usize, cmax: usize) {
        self.ops += ops;
        let span = dg.max(cmax).max(1) as u64;
        let log = 64 - (span - 1).leading_zeros() as u64;
        let bound = 4 * dq.max(1) as u64 * dg as u64 * (log + 1);
        if ops > bound {
            self.over_bound += 1;
        }
    }
}

/// One anchored search: update `order` mapped onto group `group`'s
/// representative edge with `a → rep.0`, `b → rep.1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Task {
    pub group: usize,
    pub polarity: UpdateOp,
    pub order: usize,
    pub a: VertexId,
    pub b: VertexId,
}

/// Adjacency requirement between an order position and an earlier one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Constraint {
    pub pos: usize,
    pub label: Option<Label>,
}

/// A [`TaskGroup`] expanded into per-position constraint lists.
#[derive(Debug, Clone)]
pub struct CompiledGroup {
    pub n: usize,
    pub shared_len: usize,
    pub rep: (QueryVertex, QueryVertex),
    pub edge_label: Option<Label>,
    /// Query vertex bound by member `m` at each position.
    pub qv: Vec<Vec<QueryVertex>>,
    pub members: Vec<CompiledMember>,
    pub shared_back: Vec<Vec<Constraint>>,
    /// First position of a member's joinable leaf suffix, `usize::MAX` if none.
    pub join_from: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct CompiledMember {
    pub back: Vec<Vec<Constraint>>,
}

impl CompiledGroup {
    pub fn new(q: &QueryGraph, group: &TaskGroup) -> Self {
        let n = q.len();
        let qv: Vec<Vec<QueryVertex>> = (0..group.members.len()).map(|m| group.member_order(m)).collect();
        let members: Vec<CompiledMember> = qv
            .iter()
            .map(|order| CompiledMember {
                back: (0..n)
                    .map(|l| {
                        (0..l)
                            .filter(|&i| q.adjacent(order[i], order[l]))
                            .map(|i| Constraint { pos: i, label: q.edge_label(order[i], order[l]) })
                            .collect()
                    })
                    .collect(),
            })
            .collect();
        let shared_len = group.shared_len.min(n);
        for m in &members[1..] {
            debug_assert_eq!(m.back[..shared_len], members[0].back[..shared_len]);
        }
        let shared_back = members[0].back[..shared_len].to_vec();
        let join_from = qv
            .iter()
            .map(|order| {
                if group.entry.is_none() || shared_len >= n {
                    return usize::MAX;
                }
                let mut j = n;
                while j > shared_len.max(2) && q.degree(order[j - 1]) == 1 {
                    j -= 1;
                }
                if n - j >= 2 {
                    j
                } else {
                    usize::MAX
                }
            })
            .collect();
        CompiledGroup {
            n,
            shared_len,
            rep: group.rep,
            edge_label: group.edge_label,
            qv,
            members,
            shared_back,
            join_from,
        }
    }
}

/// Same-polarity updates of a batch, for the lower-order exclusion rule.
#[derive(Debug, Clone, Default)]
pub struct UpdateFilter {
    orders: HashMap<(VertexId, VertexId), usize>,
    touched: Vec<u64>,
}

impl UpdateFilter {
    pub fn new(batch: &UpdateBatch, polarity: UpdateOp) -> Self {
        let same: Vec<&EdgeUpdate> = batch.iter().filter(|u| u.op == polarity).collect();
        if same.len() < 2 {
            return UpdateFilter::default();
        }
        let bound = same.iter().map(|u| u.u.max(u.v) as usize + 1).max().unwrap_or(0);
        let mut touched = vec![0u64; bound.div_ceil(64)];
        let mut orders = HashMap::with_capacity(same.len());
        for up in same {
            for x in [up.u, up.v] {
                touched[x as usize / 64] |= 1 << (x % 64);
            }
            orders.insert(up.pair(), up.order);
        }
        UpdateFilter { orders, touched }
    }

    #[inline]
    fn is_touched(&self, x: VertexId) -> bool {
        self.touched.get(x as usize / 64).is_some_and(|w| w >> (x % 64) & 1 == 1)
    }

    /// Data edge `(u, v)` is an update of the same polarity ordered before `anchor`.
    #[inline]
    pub fn blocked(&self, u: VertexId, v: VertexId, anchor: usize) -> bool {
        self.is_touched(u)
            && self.is_touched(v)
            && self.orders.get(&(u.min(v), u.max(v))).is_some_and(|&o| o < anchor)
    }
}

/// Graph and candidate table one polarity is searched against.
#[derive(Debug)]
pub struct SearchEnv<'a> {
    pub graph: &'a GraphSnapshot,
    pub table: &'a CandidateTable,
    pub filter: UpdateFilter,
    max_column: usize,
}

impl<'a> SearchEnv<'a> {
    fn new(graph: &'a GraphSnapshot, table: &'a CandidateTable, batch: &UpdateBatch, polarity: UpdateOp) -> Self {
        let max_column = table.column_sizes().into_iter().max().unwrap_or(0);
        SearchEnv { graph, table, filter: UpdateFilter::new(batch, polarity), max_column }
    }
}

/// Everything the search of one batch reads.
#[derive(Debug)]
pub struct BatchInput<'a> {
    pub query: &'a QueryGraph,
    pub batch: &'a UpdateBatch,
    pub groups: Vec<CompiledGroup>,
    pub negative: SearchEnv<'a>,
    pub positive: SearchEnv<'a>,
    pub config: MatchConfig,
}

impl<'a> BatchInput<'a> {
    /// `before`/`table_before` describe the graph the batch applies to,
    /// `after`/`table_after` the result.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        plan: &'a QueryPlan,
        batch: &'a UpdateBatch,
        before: &'a GraphSnapshot,
        table_before: &'a CandidateTable,
        after: &'a GraphSnapshot,
        table_after: &'a CandidateTable,
        config: MatchConfig,
    ) -> Self {
        let q = plan.query();
        BatchInput {
            query: q,
            batch,
            groups: plan.groups(config.coalesce).iter().map(|g| CompiledGroup::new(q, g)).collect(),
            negative: SearchEnv::new(before, table_before, batch, UpdateOp::Delete),
            positive: SearchEnv::new(after, table_after, batch, UpdateOp::Insert),
            config,
        }
    }

    #[inline]
    pub fn env(&self, polarity: UpdateOp) -> &SearchEnv<'a> {
        match polarity {
            UpdateOp::Insert => &self.positive,
            UpdateOp::Delete => &self.negative,
        }
    }

    #[inline]
    pub fn group(&self, task: Task) -> &CompiledGroup {
        &self.groups[task.group]
    }

    pub fn max_column(&self, polarity: UpdateOp) -> usize {
        self.env(polarity).max_column
    }

    /// One task per (update, compatible group representative).
    pub fn tasks(&self) -> Vec<Task> {
        let mut out = Vec::new();
        for up in self.batch {
            let env = self.env(up.op);
            let (Some(la), Some(lb)) = (env.graph.label(up.u), env.graph.label(up.v)) else {
                continue;
            };
            let edge_label = match up.op {
                UpdateOp::Insert => up.edge_label,
                UpdateOp::Delete => env.graph.edge_label(up.u, up.v),
            };
            for (gi, g) in self.groups.iter().enumerate() {
                if compatible(self.query, g.rep, g.edge_label, (la, lb), edge_label) {
                    out.push(Task { group: gi, polarity: up.op, order: up.order, a: up.u, b: up.v });
                }
            }
        }
        out
    }
}

fn compatible(
    q: &QueryGraph,
    (x, y): (QueryVertex, QueryVertex),
    query_label: Option<Label>,
    (la, lb): (Label, Label),
    data_label: Option<Label>,
) -> bool {
    q.label(x) == la && q.label(y) == lb && query_label.is_none_or(|l| data_label == Some(l))
}

/// Oriented query edges an update is searched from, `update.u` binding the first endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MappedEdge {
    pub group: usize,
    pub edge: (QueryVertex, QueryVertex),
}

/// Group representatives compatible with an update whose endpoints carry
/// `labels` and whose edge carries `edge_label`. With coalescing, members of
/// an equivalent edge set are covered by their representative only.
pub fn map_update_to_query_edges(
    plan: &QueryPlan,
    coalesce: bool,
    labels: (Label, Label),
    edge_label: Option<Label>,
) -> Vec<MappedEdge> {
    plan.groups(coalesce)
        .iter()
        .enumerate()
        .filter(|(_, g)| compatible(plan.query(), g.rep, g.edge_label, labels, edge_label))
        .map(|(group, g)| MappedEdge { group, edge: g.rep })
        .collect()
}

/// Runs every task of the batch on the calling thread.
pub fn match_batch(input: &BatchInput<'_>) -> Result<(IncrementalMatchSet, SearchStats), MatchError> {
    let mut positive = Vec::new();
    let mut negative = Vec::new();
    let mut stats = SearchStats::default();
    for task in input.tasks() {
        let out = match task.polarity {
            UpdateOp::Insert => &mut positive,
            UpdateOp::Delete => &mut negative,
        };
        let mut s = Searcher::new(input, task, out);
        s.run(&mut NoHooks)?;
        stats.merge(&s.stats);
    }
    Ok((IncrementalMatchSet::new(positive, negative), stats))
}

/// Accepts a match found from update `anchor` only if every other update of
/// the same polarity it contains comes later in the batch.
pub fn dedupe_by_order(q: &QueryGraph, mapping: &[VertexId], anchor: usize, polarity: UpdateOp, batch: &UpdateBatch) -> bool {
    let index = batch.index();
    q.edges().iter().all(|e| {
        let (x, y) = (mapping[e.a], mapping[e.b]);
        match index.get(&(x.min(y), x.max(y))) {
            Some(&(op, order)) if op == polarity => order >= anchor,
            _ => true,
        }
    })
}

/// Candidates for `order[l]` given the assignment of `order[..l]`: its table
/// column intersected with the neighbors of every assigned query neighbor,
/// restricted by edge labels and excluding used data vertices.
pub fn gen_candidates(
    g: &GraphSnapshot,
    q: &QueryGraph,
    partial: &[VertexId],
    order: &[QueryVertex],
    l: usize,
    table: &CandidateTable,
) -> Vec<VertexId> {
    let u = order[l];
    let mut ops = 0;
    let mut res: Vec<VertexId> = table.column(u).to_vec();
    for i in (0..l).filter(|&i| q.adjacent(order[i], u)) {
        res = intersect::intersect(&res, g.neighbors(partial[i]), &mut ops);
        if let Some(label) = q.edge_label(order[i], u) {
            res.retain(|&c| g.edge_label(partial[i], c) == Some(label));
        }
    }
    res.retain(|c| !partial[..l].contains(c));
    res
}

/// Images of a (partial) match under each automorphism of the entry:
/// `M'(σ(u)) = M(u)` on the retained vertices. The input comes first;
/// permuted results that break an edge of the full query in `g` are dropped.
pub fn coalesced_expand<G: GraphView + ?Sized>(
    g: &G,
    q: &QueryGraph,
    entry: &DegeneratedAutomorphicSubgraph,
    mapping: &[Option<VertexId>],
) -> Vec<Vec<Option<VertexId>>> {
    let mut out = vec![mapping.to_vec()];
    for sigma in &entry.mappings {
        let mut image = mapping.to_vec();
        for u in crate::query::bits(entry.retained) {
            image[sigma[u]] = mapping[u];
        }
        let consistent = q.edges().iter().all(|e| match (image[e.a], image[e.b]) {
            (Some(x), Some(y)) => g.contains_edge(x, y) && e.label.is_none_or(|l| g.label_of_edge(x, y) == Some(l)),
            _ => true,
        });
        if consistent && !out.contains(&image) {
            out.push(image);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn intersection_bound_arithmetic() {
        let mut s = SearchStats::default();
        s.record_intersection(4 * 2 * 8 * 4, 2, 8, 5);
        assert_eq!(s.over_bound, 0);
        s.record_intersection(4 * 2 * 8 * 4 + 1, 2, 8, 5);
        assert_eq!(s.over_bound, 1);
    }

    #[test]
    fn dedupe_definition() {
        let q = QueryGraph::new(vec![0, 0, 0], &[(0, 1, None), (1, 2, None)]).unwrap();
        let batch = UpdateBatch::new([EdgeUpdate::insert(0, 1), EdgeUpdate::delete(5, 6), EdgeUpdate::insert(1, 2)]).unwrap();
        let m = [0, 1, 2];
        assert!(dedupe_by_order(&q, &m, 0, UpdateOp::Insert, &batch));
        assert!(!dedupe_by_order(&q, &m, 2, UpdateOp::Insert, &batch));
        let lone = UpdateBatch::new([EdgeUpdate::insert(0, 1)]).unwrap();
        assert!(dedupe_by_order(&q, &m, 0, UpdateOp::Insert, &lone));
    }

    #[test]
    fn filter_blocks_lower_orders_only() {
        let batch = UpdateBatch::new([EdgeUpdate::insert(0, 1), EdgeUpdate::insert(1, 2), EdgeUpdate::delete(3, 4)]).unwrap();
        let f = UpdateFilter::new(&batch, UpdateOp::Insert);
        assert!(f.blocked(1, 0, 1));
        assert!(!f.blocked(1, 0, 0));
        assert!(f.blocked(2, 1, 3));
        assert!(!f.blocked(3, 4, 9));
        let neg = UpdateFilter::new(&batch, UpdateOp::Delete);
        assert!(!neg.blocked(0, 1, 5));
    }
}
