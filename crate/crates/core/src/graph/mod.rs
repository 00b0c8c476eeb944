//! Labeled undirected data graph backed by a packed memory array.

mod batch;
pub mod pma;
mod snapshot;

use std::borrow::Cow;
use std::collections::HashMap;

use thiserror::Error;

pub use batch::{BatchError, EdgeUpdate, UpdateBatch, UpdateOp};
pub use pma::{DensityBounds, Pma};
pub use snapshot::GraphSnapshot;

use pma::{edge_key, key_source, key_target};

pub type VertexId = u32;
pub type Label = u32;

/// Largest usable vertex id; `u32::MAX` is reserved for PMA gaps.
pub const MAX_VERTEX_ID: VertexId = u32::MAX - 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpdateErrorKind {
    EdgeExists,
    EdgeMissing,
    UnknownVertex(VertexId),
}

/// Why a single update in a rejected batch could not be applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UpdateError {
    pub order: usize,
    pub u: VertexId,
    pub v: VertexId,
    pub kind: UpdateErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("vertex {0} is declared twice")]
    DuplicateVertex(VertexId),
    #[error("vertex id {0} is out of range")]
    VertexOutOfRange(VertexId),
    #[error("unknown vertex {0}")]
    UnknownVertex(VertexId),
    #[error("self-loop on vertex {0}")]
    SelfLoop(VertexId),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(VertexId, VertexId),
    #[error("edge ({u}, {v}) references unknown vertex")]
    DanglingEdge { u: VertexId, v: VertexId },
    #[error("batch rejected: {} update(s) failed, first at order {}", .0.len(), .0[0].order)]
    BatchRejected(Vec<UpdateError>),
}

/// Read access shared by the PMA-backed graph, its CSR snapshot and test oracles.
pub trait GraphView: Sync {
    /// One past the largest vertex id that may be in use.
    fn id_bound(&self) -> usize;
    fn vertex_label(&self, v: VertexId) -> Option<Label>;
    /// Sorted neighbors; empty for unknown vertices.
    fn adjacent(&self, v: VertexId) -> Cow<'_, [VertexId]>;
    fn adjacent_count(&self, v: VertexId) -> usize {
        self.adjacent(v).len()
    }
    fn contains_edge(&self, u: VertexId, v: VertexId) -> bool;
    fn label_of_edge(&self, u: VertexId, v: VertexId) -> Option<Label>;

    fn vertices(&self) -> Box<dyn Iterator<Item = VertexId> + '_> {
        Box::new((0..self.id_bound() as VertexId).filter(|&v| self.vertex_label(v).is_some()))
    }
}

#[derive(Clone, Debug, Default)]
pub struct LabeledGraph {
    labels: Vec<Option<Label>>,
    degrees: Vec<u32>,
    vertex_count: usize,
    adjacency: Pma,
    edge_labels: HashMap<(VertexId, VertexId), Label>,
}

fn ordered(u: VertexId, v: VertexId) -> (VertexId, VertexId) {
    (u.min(v), u.max(v))
}

impl LabeledGraph {
    pub fn build_from_edges(
        vertices: &[(VertexId, Label)],
        edges: &[(VertexId, VertexId, Option<Label>)],
    ) -> Result<Self, GraphError> {
        Self::build_with_bounds(vertices, edges, DensityBounds::default())
    }

    pub fn build_with_bounds(
        vertices: &[(VertexId, Label)],
        edges: &[(VertexId, VertexId, Option<Label>)],
        bounds: DensityBounds,
    ) -> Result<Self, GraphError> {
        let bound = vertices.iter().map(|&(v, _)| v as usize + 1).max().unwrap_or(0);
        let mut labels = vec![None; bound];
        for &(v, l) in vertices {
            if v > MAX_VERTEX_ID {
                return Err(GraphError::VertexOutOfRange(v));
            }
            if labels[v as usize].replace(l).is_some() {
                return Err(GraphError::DuplicateVertex(v));
            }
        }
        let known = |v: VertexId| labels.get(v as usize).copied().flatten().is_some();
        let mut keys = Vec::with_capacity(edges.len() * 2);
        let mut edge_labels = HashMap::new();
        let mut degrees = vec![0u32; bound];
        for &(u, v, l) in edges {
            if u == v {
                return Err(GraphError::SelfLoop(u));
            }
            if !known(u) || !known(v) {
                return Err(GraphError::DanglingEdge { u, v });
            }
            keys.push(edge_key(u, v));
            keys.push(edge_key(v, u));
            degrees[u as usize] += 1;
            degrees[v as usize] += 1;
            if let Some(l) = l {
                edge_labels.insert(ordered(u, v), l);
            }
        }
        keys.sort_unstable();
        if let Some(w) = keys.windows(2).find(|w| w[0] == w[1]) {
            let (u, v) = (key_source(w[0]), key_target(w[0]));
            let (u, v) = ordered(u, v);
            return Err(GraphError::DuplicateEdge(u, v));
        }
        Ok(LabeledGraph {
            vertex_count: vertices.len(),
            labels,
            degrees,
            adjacency: Pma::from_sorted(keys, bounds),
            edge_labels,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.len() / 2
    }

    pub fn label(&self, v: VertexId) -> Option<Label> {
        self.labels.get(v as usize).copied().flatten()
    }

    pub fn max_label(&self) -> Option<Label> {
        self.labels.iter().flatten().copied().max()
    }

    pub fn pma(&self) -> &Pma {
        &self.adjacency
    }

    fn check(&self, v: VertexId) -> Result<(), GraphError> {
        match self.label(v) {
            Some(_) => Ok(()),
            None => Err(GraphError::UnknownVertex(v)),
        }
    }

    fn raw_neighbors(&self, v: VertexId) -> impl Iterator<Item = VertexId> + '_ {
        let deg = self.degrees.get(v as usize).copied().unwrap_or(0) as usize;
        self.adjacency.iter_from(edge_key(v, 0)).take(deg).map(key_target)
    }

    pub fn neighbors(&self, v: VertexId) -> Result<Vec<VertexId>, GraphError> {
        self.check(v)?;
        Ok(self.raw_neighbors(v).collect())
    }

    pub fn neighbors_with_label(&self, v: VertexId, l: Label) -> Result<Vec<VertexId>, GraphError> {
        self.check(v)?;
        Ok(self.raw_neighbors(v).filter(|&w| self.label(w) == Some(l)).collect())
    }

    pub fn degree(&self, v: VertexId) -> Result<usize, GraphError> {
        self.check(v)?;
        Ok(self.degrees[v as usize] as usize)
    }

    pub fn has_edge(&self, u: VertexId, v: VertexId) -> Result<bool, GraphError> {
        self.check(u)?;
        self.check(v)?;
        Ok(self.adjacency.contains(edge_key(u, v)))
    }

    pub fn edge_label(&self, u: VertexId, v: VertexId) -> Option<Label> {
        self.edge_labels.get(&ordered(u, v)).copied()
    }

    /// All undirected edges as `(min, max, label)`, ascending.
    pub fn edges(&self) -> impl Iterator<Item = (VertexId, VertexId, Option<Label>)> + '_ {
        self.adjacency.iter().filter_map(move |k| {
            let (u, v) = (key_source(k), key_target(k));
            (u < v).then(|| (u, v, self.edge_label(u, v)))
        })
    }

    pub fn locate_segment(&self, u: VertexId, v: VertexId) -> usize {
        self.adjacency.locate_segment(edge_key(u, v))
    }

    /// Applies every update or none. Each failing update is reported.
    pub fn apply_batch(&mut self, batch: &UpdateBatch) -> Result<(), GraphError> {
        let mut errors = Vec::new();
        for up in batch {
            let fail = |kind| UpdateError { order: up.order, u: up.u, v: up.v, kind };
            if let Err(GraphError::UnknownVertex(x)) = self.check(up.u).and(self.check(up.v)) {
                errors.push(fail(UpdateErrorKind::UnknownVertex(x)));
                continue;
            }
            let present = self.adjacency.contains(edge_key(up.u, up.v));
            match (up.op, present) {
                (UpdateOp::Insert, true) => errors.push(fail(UpdateErrorKind::EdgeExists)),
                (UpdateOp::Delete, false) => errors.push(fail(UpdateErrorKind::EdgeMissing)),
                _ => {}
            }
        }
        if !errors.is_empty() {
            return Err(GraphError::BatchRejected(errors));
        }

        let mut inserts = Vec::new();
        let mut deletes = Vec::new();
        for up in batch {
            let (u, v) = (up.u as usize, up.v as usize);
            let keys = [edge_key(up.u, up.v), edge_key(up.v, up.u)];
            match up.op {
                UpdateOp::Insert => {
                    inserts.extend(keys);
                    self.degrees[u] += 1;
                    self.degrees[v] += 1;
                    if let Some(l) = up.edge_label {
                        self.edge_labels.insert(up.pair(), l);
                    }
                }
                UpdateOp::Delete => {
                    deletes.extend(keys);
                    self.degrees[u] -= 1;
                    self.degrees[v] -= 1;
                    self.edge_labels.remove(&up.pair());
                }
            }
        }
        inserts.sort_unstable();
        deletes.sort_unstable();
        self.adjacency.apply(&inserts, &deletes);
        Ok(())
    }

    pub fn add_vertex(&mut self, v: VertexId, label: Label) -> Result<(), GraphError> {
        if v > MAX_VERTEX_ID {
            return Err(GraphError::VertexOutOfRange(v));
        }
        if self.label(v).is_some() {
            return Err(GraphError::DuplicateVertex(v));
        }
        let need = v as usize + 1;
        if self.labels.len() < need {
            self.labels.resize(need, None);
            self.degrees.resize(need, 0);
        }
        self.labels[v as usize] = Some(label);
        self.vertex_count += 1;
        Ok(())
    }

    /// Deletions of every edge incident to `v`, for feeding through the
    /// normal batch path before [`LabeledGraph::remove_isolated_vertex`].
    pub fn vertex_removal_batch(&self, v: VertexId) -> Result<UpdateBatch, GraphError> {
        let ups = self.neighbors(v)?.into_iter().map(|w| EdgeUpdate::delete(v, w));
        Ok(UpdateBatch::new(ups).expect("neighbors are distinct and not v"))
    }

    pub fn remove_isolated_vertex(&mut self, v: VertexId) -> Result<(), GraphError> {
        self.check(v)?;
        if self.degrees[v as usize] != 0 {
            return Err(GraphError::BatchRejected(vec![UpdateError {
                order: 0,
                u: v,
                v,
                kind: UpdateErrorKind::EdgeExists,
            }]));
        }
        self.labels[v as usize] = None;
        self.vertex_count -= 1;
        Ok(())
    }

    pub fn snapshot(&self) -> GraphSnapshot {
        GraphSnapshot::from_graph(self)
    }
}

impl GraphView for LabeledGraph {
    fn id_bound(&self) -> usize {
        self.labels.len()
    }

    fn vertex_label(&self, v: VertexId) -> Option<Label> {
        self.label(v)
    }

    fn adjacent(&self, v: VertexId) -> Cow<'_, [VertexId]> {
        Cow::Owned(self.raw_neighbors(v).collect())
    }

    fn adjacent_count(&self, v: VertexId) -> usize {
        self.degrees.get(v as usize).copied().unwrap_or(0) as usize
    }

    fn contains_edge(&self, u: VertexId, v: VertexId) -> bool {
        self.adjacency.contains(edge_key(u, v))
    }

    fn label_of_edge(&self, u: VertexId, v: VertexId) -> Option<Label> {
        self.edge_label(u, v)
    }
}
