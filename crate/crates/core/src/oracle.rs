//! Reference semantics for tests: a set-based graph and exhaustive matching.

use std::borrow::Cow;
use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::graph::{GraphView, Label, UpdateBatch, UpdateOp, VertexId};
use crate::query::QueryGraph;

/// Largest data graph the oracle accepts.
pub const ORACLE_MAX_VERTICES: usize = 60;

/// Matches as data-vertex images indexed by query vertex.
pub type MatchSet = BTreeSet<Vec<VertexId>>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("oracle supports at most {ORACLE_MAX_VERTICES} vertices, got {0}")]
    TooLarge(usize),
    #[error("update {0} does not apply to the graph")]
    InvalidUpdate(usize),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NaiveGraph {
    labels: BTreeMap<VertexId, Label>,
    adjacency: BTreeMap<VertexId, BTreeSet<VertexId>>,
    edge_labels: BTreeMap<(VertexId, VertexId), Label>,
}

impl NaiveGraph {
    pub fn new(vertices: &[(VertexId, Label)], edges: &[(VertexId, VertexId, Option<Label>)]) -> Self {
        let mut g = NaiveGraph::default();
        for &(v, l) in vertices {
            g.labels.insert(v, l);
            g.adjacency.entry(v).or_default();
        }
        for &(u, v, l) in edges {
            g.insert(u, v, l);
        }
        g
    }

    fn insert(&mut self, u: VertexId, v: VertexId, l: Option<Label>) {
        self.adjacency.entry(u).or_default().insert(v);
        self.adjacency.entry(v).or_default().insert(u);
        if let Some(l) = l {
            self.edge_labels.insert((u.min(v), u.max(v)), l);
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.labels.len()
    }

    pub fn edge_set(&self) -> BTreeSet<(VertexId, VertexId)> {
        self.adjacency
            .iter()
            .flat_map(|(&u, ns)| ns.iter().filter(move |&&v| u < v).map(move |&v| (u, v)))
            .collect()
    }

    pub fn add_vertex(&mut self, v: VertexId, l: Label) {
        self.labels.insert(v, l);
        self.adjacency.entry(v).or_default();
    }

    /// Replays a batch; fails without side effects if any update is invalid.
    pub fn apply(&mut self, batch: &UpdateBatch) -> Result<(), OracleError> {
        for up in batch {
            let known = self.labels.contains_key(&up.u) && self.labels.contains_key(&up.v);
            let present = self.contains_edge(up.u, up.v);
            let ok = known && (present == (up.op == UpdateOp::Delete));
            if !ok {
                return Err(OracleError::InvalidUpdate(up.order));
            }
        }
        for up in batch {
            match up.op {
                UpdateOp::Insert => self.insert(up.u, up.v, up.edge_label),
                UpdateOp::Delete => {
                    self.adjacency.get_mut(&up.u).unwrap().remove(&up.v);
                    self.adjacency.get_mut(&up.v).unwrap().remove(&up.u);
                    self.edge_labels.remove(&up.pair());
                }
            }
        }
        Ok(())
    }
}

impl GraphView for NaiveGraph {
    fn id_bound(&self) -> usize {
        self.labels.keys().next_back().map_or(0, |&v| v as usize + 1)
    }

    fn vertex_label(&self, v: VertexId) -> Option<Label> {
        self.labels.get(&v).copied()
    }

    fn adjacent(&self, v: VertexId) -> Cow<'_, [VertexId]> {
        Cow::Owned(self.adjacency.get(&v).map(|s| s.iter().copied().collect()).unwrap_or_default())
    }

    fn contains_edge(&self, u: VertexId, v: VertexId) -> bool {
        self.adjacency.get(&u).is_some_and(|s| s.contains(&v))
    }

    fn label_of_edge(&self, u: VertexId, v: VertexId) -> Option<Label> {
        self.edge_labels.get(&(u.min(v), u.max(v))).copied()
    }
}

/// Every subgraph isomorphism of `q` into `g`. Query vertices are assigned
/// in id order over all label-compatible, unused data vertices; a partial
/// assignment is abandoned as soon as one of its query edges has no image.
pub fn enumerate_all_matches<G: GraphView + ?Sized>(g: &G, q: &QueryGraph) -> Result<MatchSet, OracleError> {
    let vertices: Vec<VertexId> = g.vertices().collect();
    if vertices.len() > ORACLE_MAX_VERTICES {
        return Err(OracleError::TooLarge(vertices.len()));
    }
    let mut out = MatchSet::new();
    let mut current = Vec::with_capacity(q.len());
    extend(g, q, &vertices, &mut current, &mut out);
    Ok(out)
}

fn extend<G: GraphView + ?Sized>(g: &G, q: &QueryGraph, vertices: &[VertexId], current: &mut Vec<VertexId>, out: &mut MatchSet) {
    let u = current.len();
    if u == q.len() {
        out.insert(current.clone());
        return;
    }
    for &v in vertices {
        if g.vertex_label(v) != Some(q.label(u)) || current.contains(&v) {
            continue;
        }
        let edges_ok = (0..u).filter(|&w| q.adjacent(u, w)).all(|w| {
            let x = current[w];
            g.contains_edge(v, x) && q.edge_label(u, w).is_none_or(|l| g.label_of_edge(v, x) == Some(l))
        });
        if edges_ok {
            current.push(v);
            extend(g, q, vertices, current, out);
            current.pop();
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DiffSets {
    pub positive: MatchSet,
    pub negative: MatchSet,
}

/// Matches gained and lost by applying `batch` to `g`.
pub fn incremental_diff_oracle(g: &NaiveGraph, batch: &UpdateBatch, q: &QueryGraph) -> Result<DiffSets, OracleError> {
    let before = enumerate_all_matches(g, q)?;
    let mut after_graph = g.clone();
    after_graph.apply(batch)?;
    let after = enumerate_all_matches(&after_graph, q)?;
    Ok(DiffSets {
        positive: after.difference(&before).cloned().collect(),
        negative: before.difference(&after).cloned().collect(),
    })
}
