use serde::Serialize;

use super::automorphism::{identity, Perm};
use super::degenerate::{find_k_degenerated_subgraphs, DegeneratedAutomorphicSubgraph};
use super::graph::{QueryGraph, QueryVertex};
use super::order::greedy_order;
use crate::graph::Label;

/// Alive masks in the matcher are `u64`.
pub const MAX_GROUP_MEMBERS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlanConfig {
    /// Largest number of removed vertices; `None` means |V(Q)| − 3.
    pub max_k: Option<usize>,
    /// Relative change in total candidate count that triggers new orders.
    pub drift_threshold: f64,
}

impl Default for PlanConfig {
    fn default() -> Self {
        PlanConfig { max_k: None, drift_threshold: 0.25 }
    }
}

/// An oriented query edge searched through the group's shared order. The
/// member's own order is `sigma` applied to the group order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PlanMember {
    pub edge: (QueryVertex, QueryVertex),
    pub sigma: Perm,
}

/// Unit of search work for one update: a representative oriented edge and the
/// edges whose matches are derived from it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TaskGroup {
    pub rep: (QueryVertex, QueryVertex),
    pub edge_label: Option<Label>,
    pub order: Vec<QueryVertex>,
    /// Order positions that all members search together (the retained vertices).
    pub shared_len: usize,
    pub members: Vec<PlanMember>,
    /// Index into [`QueryPlan::entries`], if coalesced.
    pub entry: Option<usize>,
}

impl TaskGroup {
    /// Query vertex that member `m` binds at order position `level`.
    #[inline]
    pub fn member_vertex(&self, m: usize, level: usize) -> QueryVertex {
        self.members[m].sigma[self.order[level]]
    }

    pub fn member_order(&self, m: usize) -> Vec<QueryVertex> {
        self.order.iter().map(|&u| self.members[m].sigma[u]).collect()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct QueryPlan {
    #[serde(skip)]
    query: QueryGraph,
    pub entries: Vec<DegeneratedAutomorphicSubgraph>,
    /// Coalesced groups followed by singles for every oriented edge left over.
    pub coalesced: Vec<TaskGroup>,
    /// One group per oriented edge (`2·id` for `a→b`, `2·id + 1` for `b→a`).
    pub singles: Vec<TaskGroup>,
    basis_counts: Vec<usize>,
    config: PlanConfig,
}

fn oriented_index(q: &QueryGraph, x: QueryVertex, y: QueryVertex) -> usize {
    let id = q.edge_id(x, y).expect("oriented index of a query edge");
    2 * id + usize::from(x > y)
}

impl QueryPlan {
    /// `counts[u]` is the candidate count of `u`, used for order selectivity.
    pub fn build(q: &QueryGraph, counts: &[usize], config: PlanConfig) -> Self {
        let entries = find_k_degenerated_subgraphs(q, config.max_k);
        let mut plan = QueryPlan {
            query: q.clone(),
            entries,
            coalesced: Vec::new(),
            singles: Vec::new(),
            basis_counts: counts.to_vec(),
            config,
        };
        plan.layout(counts);
        plan
    }

    pub fn query(&self) -> &QueryGraph {
        &self.query
    }

    pub fn config(&self) -> &PlanConfig {
        &self.config
    }

    pub fn groups(&self, coalesce: bool) -> &[TaskGroup] {
        if coalesce {
            &self.coalesced
        } else {
            &self.singles
        }
    }

    fn layout(&mut self, counts: &[usize]) {
        let q = &self.query;
        let n = q.len();
        let mut coalesced = Vec::new();
        // Per oriented edge: (group index, member index) when coalesced.
        let mut covered: Vec<Option<(usize, usize)>> = vec![None; 2 * q.edge_count()];
        for (ei, entry) in self.entries.iter().enumerate() {
            let p = q.edge(entry.prioritized_edge.expect("entries carry a prioritized edge"));
            let mut sigmas = vec![identity(n)];
            sigmas.extend(entry.mappings.iter().cloned());
            for rep in [(p.a, p.b), (p.b, p.a)] {
                if covered[oriented_index(q, rep.0, rep.1)].is_some() {
                    continue;
                }
                let mut members: Vec<PlanMember> = Vec::new();
                for s in &sigmas {
                    let edge = (s[rep.0], s[rep.1]);
                    let id = q.edge_id(edge.0, edge.1).unwrap();
                    if !entry.edges.contains(&id) || members.iter().any(|m| m.edge == edge) {
                        continue;
                    }
                    members.push(PlanMember { edge, sigma: s.clone() });
                }
                let order = greedy_order(q, rep, entry.retained, counts);
                let shared_len = entry.retained.count_ones() as usize;
                for chunk in members.chunks(MAX_GROUP_MEMBERS) {
                    let gi = coalesced.len();
                    for (mi, m) in chunk.iter().enumerate() {
                        covered[oriented_index(q, m.edge.0, m.edge.1)] = Some((gi, mi));
                    }
                    coalesced.push(TaskGroup {
                        rep,
                        edge_label: p.label,
                        order: order.clone(),
                        shared_len,
                        members: chunk.to_vec(),
                        entry: Some(ei),
                    });
                }
            }
        }

        let mut singles = Vec::with_capacity(2 * q.edge_count());
        for e in q.edges() {
            for edge in [(e.a, e.b), (e.b, e.a)] {
                let order = match covered[oriented_index(q, edge.0, edge.1)] {
                    Some((gi, mi)) => coalesced[gi].member_order(mi),
                    None => greedy_order(q, edge, 0, counts),
                };
                singles.push(TaskGroup {
                    rep: edge,
                    edge_label: e.label,
                    order,
                    shared_len: n,
                    members: vec![PlanMember { edge, sigma: identity(n) }],
                    entry: None,
                });
            }
        }
        for (oi, single) in singles.iter().enumerate() {
            if covered[oi].is_none() {
                coalesced.push(single.clone());
            }
        }
        self.coalesced = coalesced;
        self.singles = singles;
    }

    /// Whether `counts` drifted past the threshold from the counts the orders were chosen for.
    pub fn needs_refresh(&self, counts: &[usize]) -> bool {
        let before: usize = self.basis_counts.iter().sum();
        let delta: usize = self.basis_counts.iter().zip(counts).map(|(&a, &b)| a.abs_diff(b)).sum();
        (delta as f64) > self.config.drift_threshold * before.max(1) as f64
    }

    /// Recomputes the orders when total candidate counts moved by more than
    /// the drift threshold since they were last chosen. Returns whether they did.
    pub fn refresh_orders(&mut self, counts: &[usize]) -> bool {
        if !self.needs_refresh(counts) {
            return false;
        }
        self.basis_counts = counts.to_vec();
        self.layout(counts);
        true
    }
}
