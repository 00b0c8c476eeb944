#![allow(dead_code)]

use bdsm_core::graph::{EdgeUpdate, Label, LabeledGraph, UpdateBatch, VertexId};
use bdsm_core::oracle::NaiveGraph;
use bdsm_core::query::QueryGraph;
use rand::seq::SliceRandom;
use rand::Rng;

pub type Edge = (VertexId, VertexId, Option<Label>);

pub const A: Label = 1;
pub const B: Label = 2;
pub const C: Label = 3;
pub const D: Label = 4;

/// Four-vertex query with a symmetric triangle and a pendant C vertex.
pub fn running_query() -> QueryGraph {
    QueryGraph::new(vec![A, B, B, C], &[(0, 1, None), (0, 2, None), (1, 2, None), (1, 3, None)]).unwrap()
}

pub fn running_graph() -> (Vec<(VertexId, Label)>, Vec<Edge>) {
    let labels = [A, A, B, B, B, B, B, D, C, C];
    let vertices = labels.iter().enumerate().map(|(v, &l)| (v as VertexId, l)).collect();
    let edges = [
        (0, 3), (0, 4), (0, 6), (1, 5), (1, 6), (5, 6), (5, 9),
        (2, 3), (2, 4), (2, 8), (3, 8), (4, 5), (4, 9), (7, 9),
    ];
    (vertices, edges.iter().map(|&(u, v)| (u, v, None)).collect())
}

pub fn running_updates() -> Vec<EdgeUpdate> {
    vec![EdgeUpdate::insert(0, 2), EdgeUpdate::insert(1, 4), EdgeUpdate::delete(4, 5)]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Shape {
    Tree,
    Sparse,
    Dense,
}

pub struct Instance {
    pub vertices: Vec<(VertexId, Label)>,
    pub edges: Vec<Edge>,
    pub query: QueryGraph,
    pub batches: Vec<UpdateBatch>,
}

impl Instance {
    pub fn labeled(&self) -> LabeledGraph {
        LabeledGraph::build_from_edges(&self.vertices, &self.edges).unwrap()
    }

    pub fn naive(&self) -> NaiveGraph {
        NaiveGraph::new(&self.vertices, &self.edges)
    }
}

pub fn random_graph<R: Rng>(rng: &mut R, n: usize, m: usize, labels: Label) -> (Vec<(VertexId, Label)>, Vec<Edge>) {
    let vertices: Vec<_> = (0..n as VertexId).map(|v| (v, rng.gen_range(0..labels))).collect();
    let mut pairs: Vec<(VertexId, VertexId)> =
        (0..n as VertexId).flat_map(|a| (a + 1..n as VertexId).map(move |b| (a, b))).collect();
    pairs.shuffle(rng);
    pairs.truncate(m);
    (vertices, pairs.into_iter().map(|(a, b)| (a, b, None)).collect())
}

pub fn random_query<R: Rng>(rng: &mut R, size: usize, shape: Shape, labels: Label) -> QueryGraph {
    let mut edges: Vec<(usize, usize)> = (1..size).map(|v| (rng.gen_range(0..v), v)).collect();
    let mut rest: Vec<(usize, usize)> = (0..size)
        .flat_map(|a| (a + 1..size).map(move |b| (a, b)))
        .filter(|e| !edges.contains(e))
        .collect();
    rest.shuffle(rng);
    // Average degree 2|E|/|V| below 3 for sparse, at least 3 for dense.
    let target = match shape {
        Shape::Tree => size - 1,
        Shape::Sparse => rng.gen_range(size - 1..=(3 * size - 1) / 2),
        Shape::Dense => (3 * size).div_ceil(2).max(size),
    };
    while edges.len() < target {
        let Some(e) = rest.pop() else { break };
        edges.push(e);
    }
    let qlabels = (0..size).map(|_| rng.gen_range(0..labels)).collect();
    let e: Vec<_> = edges.into_iter().map(|(a, b)| (a, b, None)).collect();
    QueryGraph::new(qlabels, &e).unwrap()
}

/// Up to `size` distinct updates valid against `g`; inserts and deletes mixed.
pub fn random_batch<R: Rng>(rng: &mut R, g: &NaiveGraph, n: usize, size: usize) -> UpdateBatch {
    let present = g.edge_set();
    let mut used = std::collections::BTreeSet::new();
    let mut ups = Vec::new();
    let mut tries = 0;
    while ups.len() < size && tries < 1000 {
        tries += 1;
        let a = rng.gen_range(0..n as VertexId);
        let b = rng.gen_range(0..n as VertexId);
        if a == b {
            continue;
        }
        let key = (a.min(b), a.max(b));
        if used.contains(&key) {
            continue;
        }
        let exists = present.contains(&key);
        let want_delete = rng.gen_bool(0.4);
        if exists != want_delete {
            continue;
        }
        used.insert(key);
        ups.push(if exists { EdgeUpdate::delete(a, b) } else { EdgeUpdate::insert(a, b) });
    }
    UpdateBatch::new(ups).unwrap()
}

pub fn random_instance<R: Rng>(rng: &mut R) -> Instance {
    let n = rng.gen_range(8..=30);
    let max_m = (n * (n - 1) / 2).min(90);
    let m = rng.gen_range(n..=max_m);
    let labels = rng.gen_range(1..=3);
    let (vertices, edges) = random_graph(rng, n, m, labels);
    let shape = [Shape::Tree, Shape::Sparse, Shape::Dense][rng.gen_range(0..3)];
    let qsize = rng.gen_range(3..=6);
    let query = random_query(rng, qsize, shape, labels);
    let mut naive = NaiveGraph::new(&vertices, &edges);
    let mut batches = Vec::new();
    for _ in 0..rng.gen_range(1..=3) {
        let size = rng.gen_range(1..=8);
        let b = random_batch(rng, &naive, n, size);
        naive.apply(&b).unwrap();
        batches.push(b);
    }
    Instance { vertices, edges, query, batches }
}
