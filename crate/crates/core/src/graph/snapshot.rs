use std::borrow::Cow;

use super::{GraphView, Label, LabeledGraph, UpdateBatch, VertexId};

const NO_LABEL: Label = Label::MAX;

/// Immutable CSR copy of a [`LabeledGraph`], read by the search workers.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GraphSnapshot {
    labels: Vec<Option<Label>>,
    offsets: Vec<usize>,
    targets: Vec<VertexId>,
    /// Parallel to `targets`; only present when the graph has edge labels.
    edge_labels: Option<Vec<Label>>,
}

impl GraphSnapshot {
    pub fn from_graph(g: &LabeledGraph) -> Self {
        let bound = g.id_bound();
        let mut offsets = Vec::with_capacity(bound + 1);
        let mut targets = Vec::with_capacity(g.pma().len());
        offsets.push(0);
        let mut keys = g.pma().iter().peekable();
        for v in 0..bound as VertexId {
            while let Some(&k) = keys.peek() {
                if super::key_source(k) != v {
                    break;
                }
                targets.push(super::key_target(k));
                keys.next();
            }
            offsets.push(targets.len());
        }
        let edge_labels = (!g.edge_labels.is_empty()).then(|| {
            let mut out = Vec::with_capacity(targets.len());
            for v in 0..bound {
                for &w in &targets[offsets[v]..offsets[v + 1]] {
                    out.push(g.edge_label(v as VertexId, w).unwrap_or(NO_LABEL));
                }
            }
            out
        });
        GraphSnapshot { labels: g.labels.clone(), offsets, targets, edge_labels }
    }

    /// Snapshot of `g` after `batch`, where `self` mirrors `g` before it.
    /// Only the batch endpoints and new vertices are read back from the PMA.
    pub fn after_batch(&self, g: &LabeledGraph, batch: &UpdateBatch) -> Self {
        if !g.edge_labels.is_empty() || self.edge_labels.is_some() {
            return Self::from_graph(g);
        }
        let bound = g.id_bound();
        let old_bound = self.offsets.len().saturating_sub(1);
        let mut touched: Vec<usize> = batch.iter().flat_map(|u| [u.u as usize, u.v as usize]).collect();
        touched.sort_unstable();
        touched.dedup();
        let mut touched = touched.into_iter().peekable();
        let mut offsets = Vec::with_capacity(bound + 1);
        let mut targets = Vec::with_capacity(g.pma().len());
        offsets.push(0);
        let mut v = 0;
        while v < bound {
            if touched.next_if_eq(&v).is_some() || v >= old_bound {
                targets.extend(g.raw_neighbors(v as VertexId));
                offsets.push(targets.len());
                v += 1;
                continue;
            }
            let end = touched.peek().map_or(bound, |&t| t).min(old_bound).min(bound);
            let (start, stop) = (self.offsets[v], self.offsets[end]);
            let base = targets.len();
            targets.extend_from_slice(&self.targets[start..stop]);
            offsets.extend(self.offsets[v + 1..=end].iter().map(|&o| o - start + base));
            v = end;
        }
        GraphSnapshot { labels: g.labels.clone(), offsets, targets, edge_labels: None }
    }

    #[inline]
    pub fn neighbors(&self, v: VertexId) -> &[VertexId] {
        let v = v as usize;
        if v + 1 >= self.offsets.len() {
            return &[];
        }
        &self.targets[self.offsets[v]..self.offsets[v + 1]]
    }

    #[inline]
    pub fn label(&self, v: VertexId) -> Option<Label> {
        self.labels.get(v as usize).copied().flatten()
    }

    pub fn has_edge_labels(&self) -> bool {
        self.edge_labels.is_some()
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len() / 2
    }

    #[inline]
    pub fn has_edge(&self, u: VertexId, v: VertexId) -> bool {
        self.neighbors(u).binary_search(&v).is_ok()
    }

    /// Label of the edge to `neighbors(u)[idx]`.
    #[inline]
    pub fn edge_label_at(&self, u: VertexId, idx: usize) -> Option<Label> {
        let l = self.edge_labels.as_ref()?[self.offsets[u as usize] + idx];
        (l != NO_LABEL).then_some(l)
    }

    pub fn max_degree(&self) -> usize {
        self.offsets.windows(2).map(|w| w[1] - w[0]).max().unwrap_or(0)
    }

    pub fn edge_label(&self, u: VertexId, v: VertexId) -> Option<Label> {
        let labels = self.edge_labels.as_ref()?;
        let idx = self.neighbors(u).binary_search(&v).ok()?;
        let l = labels[self.offsets[u as usize] + idx];
        (l != NO_LABEL).then_some(l)
    }
}

impl GraphView for GraphSnapshot {
    fn id_bound(&self) -> usize {
        self.labels.len()
    }

    fn vertex_label(&self, v: VertexId) -> Option<Label> {
        self.label(v)
    }

    fn adjacent(&self, v: VertexId) -> Cow<'_, [VertexId]> {
        Cow::Borrowed(self.neighbors(v))
    }

    fn contains_edge(&self, u: VertexId, v: VertexId) -> bool {
        self.has_edge(u, v)
    }

    fn label_of_edge(&self, u: VertexId, v: VertexId) -> Option<Label> {
        self.edge_label(u, v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snapshot_mirrors_graph() {
        let g = LabeledGraph::build_from_edges(
            &[(0, 1), (1, 1), (3, 2)],
            &[(0, 1, None), (3, 0, Some(5))],
        )
        .unwrap();
        let s = g.snapshot();
        assert_eq!(s.neighbors(0), &[1, 3]);
        assert_eq!(s.neighbors(2), &[] as &[u32]);
        assert_eq!(s.neighbors(9), &[] as &[u32]);
        assert_eq!(s.edge_label(0, 3), Some(5));
        assert_eq!(s.edge_label(0, 1), None);
        assert_eq!(s.edge_count(), 2);
        assert_eq!(s.label(2), None);
    }

    #[test]
    fn after_batch_matches_full_rebuild() {
        use crate::graph::EdgeUpdate;
        let vertices: Vec<_> = (0..12).map(|v| (v, v % 3)).collect();
        let edges: Vec<_> = (0..11).map(|v| (v, v + 1, None)).collect();
        let mut g = LabeledGraph::build_from_edges(&vertices, &edges).unwrap();
        let mut s = g.snapshot();
        let batches = [
            vec![EdgeUpdate::insert(0, 11), EdgeUpdate::delete(4, 5)],
            vec![EdgeUpdate::insert(3, 7), EdgeUpdate::insert(7, 9), EdgeUpdate::delete(0, 1)],
            vec![EdgeUpdate::insert(12, 2)],
            vec![],
        ];
        for (i, ups) in batches.into_iter().enumerate() {
            if i == 2 {
                g.add_vertex(12, 1).unwrap();
            }
            let b = UpdateBatch::new(ups).unwrap();
            g.apply_batch(&b).unwrap();
            s = s.after_batch(&g, &b);
            assert_eq!(s, g.snapshot());
        }
    }
}
