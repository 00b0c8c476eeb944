use std::collections::HashMap;

use serde::Serialize;
use thiserror::Error;

use super::{Label, VertexId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum UpdateOp {
    Insert,
    Delete,
}

impl UpdateOp {
    pub fn sign(self) -> char {
        match self {
            UpdateOp::Insert => '+',
            UpdateOp::Delete => '-',
        }
    }
}

/// One edge insertion or deletion. `order` is its position in the batch.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct EdgeUpdate {
    pub op: UpdateOp,
    pub u: VertexId,
    pub v: VertexId,
    pub edge_label: Option<Label>,
    pub order: usize,
}

impl EdgeUpdate {
    pub fn insert(u: VertexId, v: VertexId) -> Self {
        EdgeUpdate { op: UpdateOp::Insert, u, v, edge_label: None, order: 0 }
    }

    pub fn insert_labeled(u: VertexId, v: VertexId, label: Label) -> Self {
        EdgeUpdate { edge_label: Some(label), ..EdgeUpdate::insert(u, v) }
    }

    pub fn delete(u: VertexId, v: VertexId) -> Self {
        EdgeUpdate { op: UpdateOp::Delete, u, v, edge_label: None, order: 0 }
    }

    /// Unordered endpoint pair.
    pub fn pair(&self) -> (VertexId, VertexId) {
        (self.u.min(self.v), self.u.max(self.v))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BatchError {
    #[error("update {order} is a self-loop on vertex {vertex}")]
    SelfLoop { order: usize, vertex: VertexId },
    #[error("updates {first} and {second} both touch edge ({u}, {v})")]
    Conflict { first: usize, second: usize, u: VertexId, v: VertexId },
}

/// Ordered set of edge updates touching pairwise distinct vertex pairs.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct UpdateBatch {
    updates: Vec<EdgeUpdate>,
}

impl UpdateBatch {
    /// Renumbers `order` by position and rejects self-loops and repeated pairs.
    pub fn new(updates: impl IntoIterator<Item = EdgeUpdate>) -> Result<Self, BatchError> {
        let mut seen: HashMap<(VertexId, VertexId), usize> = HashMap::new();
        let mut out = Vec::new();
        for (order, mut update) in updates.into_iter().enumerate() {
            update.order = order;
            if update.u == update.v {
                return Err(BatchError::SelfLoop { order, vertex: update.u });
            }
            let (u, v) = update.pair();
            if let Some(&first) = seen.get(&(u, v)) {
                return Err(BatchError::Conflict { first, second: order, u, v });
            }
            seen.insert((u, v), order);
            out.push(update);
        }
        Ok(UpdateBatch { updates: out })
    }

    pub fn updates(&self) -> &[EdgeUpdate] {
        &self.updates
    }

    pub fn len(&self) -> usize {
        self.updates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.updates.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, EdgeUpdate> {
        self.updates.iter()
    }

    pub fn insertions(&self) -> impl Iterator<Item = &EdgeUpdate> {
        self.updates.iter().filter(|u| u.op == UpdateOp::Insert)
    }

    pub fn deletions(&self) -> impl Iterator<Item = &EdgeUpdate> {
        self.updates.iter().filter(|u| u.op == UpdateOp::Delete)
    }

    /// Batch that undoes this one. Edge labels of deleted edges are taken from `labels`.
    pub fn inverse(&self, labels: impl Fn(VertexId, VertexId) -> Option<Label>) -> UpdateBatch {
        let updates = self
            .updates
            .iter()
            .map(|up| match up.op {
                UpdateOp::Insert => EdgeUpdate { op: UpdateOp::Delete, edge_label: None, ..*up },
                UpdateOp::Delete => EdgeUpdate {
                    op: UpdateOp::Insert,
                    edge_label: labels(up.u, up.v),
                    ..*up
                },
            })
            .collect();
        UpdateBatch { updates }
    }

    /// Per unordered pair: the update touching it.
    pub fn index(&self) -> HashMap<(VertexId, VertexId), (UpdateOp, usize)> {
        self.updates.iter().map(|u| (u.pair(), (u.op, u.order))).collect()
    }
}

impl<'a> IntoIterator for &'a UpdateBatch {
    type Item = &'a EdgeUpdate;
    type IntoIter = std::slice::Iter<'a, EdgeUpdate>;

    fn into_iter(self) -> Self::IntoIter {
        self.updates.iter()
    }
}
