//! Seeded generators for data graphs, query sets and update streams.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

use bdsm_core::graph::{EdgeUpdate, GraphSnapshot, GraphView, Label, UpdateBatch, VertexId};
use bdsm_core::query::QueryGraph;
use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use crate::io::GraphRecords;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GenerateError {
    #[error("query size {0} outside 4..=12")]
    QuerySize(usize),
    #[error("no {category} query of size {size} found after {attempts} attempts")]
    Unsatisfiable { category: QueryCategory, size: usize, attempts: usize },
    #[error("rate {rate} of {edges} edges yields no update")]
    RateTooSmall { rate: f64, edges: usize },
    #[error("rate must be in (0, 1], got {0}")]
    Rate(f64),
    #[error("needed {needed} deletable edges, found {found}")]
    InsufficientEdges { needed: usize, found: usize },
    #[error("could not sample {needed} label-compatible non-edges")]
    InsufficientNonEdges { needed: usize },
    #[error("k-core density mode supports k in {{4, 8, 12}}, got {0}")]
    CoreK(u32),
    #[error("{0}")]
    Spec(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum QueryCategory {
    Dense,
    Sparse,
    Tree,
}

impl QueryCategory {
    pub const ALL: [QueryCategory; 3] = [QueryCategory::Dense, QueryCategory::Sparse, QueryCategory::Tree];

    /// Dense: average degree at least 3. Sparse: below 3. Tree: connected and acyclic.
    pub fn admits(self, q: &QueryGraph) -> bool {
        match self {
            QueryCategory::Dense => q.avg_degree() >= 3.0,
            QueryCategory::Sparse => q.avg_degree() < 3.0,
            QueryCategory::Tree => q.is_tree(),
        }
    }
}

impl fmt::Display for QueryCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            QueryCategory::Dense => "dense",
            QueryCategory::Sparse => "sparse",
            QueryCategory::Tree => "tree",
        })
    }
}

impl FromStr for QueryCategory {
    type Err = GenerateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "dense" => Ok(QueryCategory::Dense),
            "sparse" => Ok(QueryCategory::Sparse),
            "tree" => Ok(QueryCategory::Tree),
            _ => Err(GenerateError::Spec(format!("unknown query category `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuerySpec {
    pub category: QueryCategory,
    pub size: usize,
    pub count: usize,
}

impl QuerySpec {
    pub fn new(category: QueryCategory, size: usize) -> Self {
        QuerySpec { category, size, count: 50 }
    }
}

/// `<category>,<size>,<count>`.
impl FromStr for QuerySpec {
    type Err = GenerateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        let [cat, size, count] = parts[..] else {
            return Err(GenerateError::Spec(format!("expected <category>,<size>,<count>, got `{s}`")));
        };
        let num = |t: &str| t.parse::<usize>().map_err(|_| GenerateError::Spec(format!("invalid number `{t}`")));
        Ok(QuerySpec { category: cat.parse()?, size: num(size)?, count: num(count)? })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StreamMode {
    Insert,
    Delete,
    /// Two insertions per deletion.
    Mixed,
}

impl FromStr for StreamMode {
    type Err = GenerateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "insert" => Ok(StreamMode::Insert),
            "delete" => Ok(StreamMode::Delete),
            "mixed" => Ok(StreamMode::Mixed),
            _ => Err(GenerateError::Spec(format!("unknown stream mode `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StreamSpec {
    /// Fraction of the current edge count.
    pub rate: f64,
    pub mode: StreamMode,
    pub batches: usize,
    /// Restrict sampling to the `k`-core.
    pub core_k: Option<u32>,
}

impl Default for StreamSpec {
    fn default() -> Self {
        StreamSpec { rate: 0.10, mode: StreamMode::Insert, batches: 10, core_k: None }
    }
}

/// `<rate>,<mode>,<batches>[,<k>]`; the rate may be a fraction or end in `%`.
impl FromStr for StreamSpec {
    type Err = GenerateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if !(3..=4).contains(&parts.len()) {
            return Err(GenerateError::Spec(format!("expected <rate>,<mode>,<batches>[,<k>], got `{s}`")));
        }
        let bad = |t: &str| GenerateError::Spec(format!("invalid number `{t}`"));
        let rate = match parts[0].strip_suffix('%') {
            Some(p) => p.parse::<f64>().map_err(|_| bad(parts[0]))? / 100.0,
            None => parts[0].parse::<f64>().map_err(|_| bad(parts[0]))?,
        };
        let core_k = parts.get(3).map(|t| t.parse::<u32>().map_err(|_| bad(t))).transpose()?;
        Ok(StreamSpec {
            rate,
            mode: parts[1].parse()?,
            batches: parts[2].parse().map_err(|_| bad(parts[2]))?,
            core_k,
        })
    }
}

/// Planted-community graph: a fraction `intra` of the edges joins two
/// vertices of the same community, the rest are uniform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticSpec {
    pub vertices: usize,
    pub edges: usize,
    pub labels: Label,
    pub communities: usize,
    pub intra: f64,
}

pub fn synthetic_graph<R: Rng>(spec: &SyntheticSpec, rng: &mut R) -> GraphRecords {
    let n = spec.vertices.max(2);
    let max_edges = n * (n - 1) / 2;
    let m = spec.edges.min(max_edges);
    let vertices: Vec<(VertexId, Label)> = (0..n as VertexId).map(|v| (v, rng.gen_range(0..spec.labels.max(1)))).collect();
    let communities = spec.communities.clamp(1, n);
    let span = n.div_ceil(communities);
    let mut seen = HashSet::with_capacity(m);
    let mut edges = Vec::with_capacity(m);
    while edges.len() < m {
        let (u, v) = if rng.gen_bool(spec.intra.clamp(0.0, 1.0)) {
            let c = rng.gen_range(0..communities);
            let lo = c * span;
            let hi = ((c + 1) * span).min(n);
            if hi - lo < 2 {
                continue;
            }
            (rng.gen_range(lo..hi), rng.gen_range(lo..hi))
        } else {
            (rng.gen_range(0..n), rng.gen_range(0..n))
        };
        if u == v {
            continue;
        }
        let key = (u.min(v) as VertexId, u.max(v) as VertexId);
        if seen.insert(key) {
            edges.push((key.0, key.1, None));
        }
    }
    edges.sort_unstable();
    GraphRecords { vertices, edges }
}

/// Core number of every vertex id below `g.id_bound()`, by bucket peeling.
pub fn core_numbers<G: GraphView + ?Sized>(g: &G) -> Vec<u32> {
    let n = g.id_bound();
    let mut degree: Vec<usize> = (0..n as VertexId).map(|v| g.adjacent_count(v)).collect();
    let max_deg = degree.iter().copied().max().unwrap_or(0);
    let mut buckets: Vec<Vec<VertexId>> = vec![Vec::new(); max_deg + 1];
    for (v, &d) in degree.iter().enumerate() {
        buckets[d].push(v as VertexId);
    }
    let mut core = vec![0u32; n];
    let mut done = vec![false; n];
    let mut d = 0;
    while d <= max_deg {
        let Some(v) = buckets[d].pop() else {
            d += 1;
            continue;
        };
        let vi = v as usize;
        if done[vi] || degree[vi] != d {
            continue;
        }
        done[vi] = true;
        core[vi] = d as u32;
        for &w in g.adjacent(v).iter() {
            let wi = w as usize;
            if !done[wi] && degree[wi] > d {
                degree[wi] -= 1;
                buckets[degree[wi]].push(w);
            }
        }
    }
    core
}

const WALK_ATTEMPTS: usize = 200;

/// Queries extracted from `g` by random walks, rejected until they fit the category.
pub fn generate_queries<R: Rng>(g: &GraphSnapshot, spec: &QuerySpec, rng: &mut R) -> Result<Vec<QueryGraph>, GenerateError> {
    if !(4..=12).contains(&spec.size) {
        return Err(GenerateError::QuerySize(spec.size));
    }
    let starts: Vec<VertexId> = g.vertices().filter(|&v| !g.neighbors(v).is_empty()).collect();
    let budget = WALK_ATTEMPTS * spec.count.max(1);
    let mut out = Vec::with_capacity(spec.count);
    let mut attempts = 0;
    while out.len() < spec.count {
        if attempts == budget || starts.is_empty() {
            return Err(GenerateError::Unsatisfiable { category: spec.category, size: spec.size, attempts });
        }
        attempts += 1;
        if let Some(q) = extract(g, &starts, spec, rng) {
            out.push(q);
        }
    }
    Ok(out)
}

fn extract<R: Rng>(g: &GraphSnapshot, starts: &[VertexId], spec: &QuerySpec, rng: &mut R) -> Option<QueryGraph> {
    let n = spec.size;
    let mut picked: Vec<VertexId> = vec![*starts.choose(rng)?];
    let mut tree: Vec<(usize, usize)> = Vec::new();
    let mut at = 0;
    for _ in 0..n * 20 {
        if picked.len() == n {
            break;
        }
        let &next = g.neighbors(picked[at]).choose(rng)?;
        match picked.iter().position(|&p| p == next) {
            Some(i) => at = i,
            None => {
                picked.push(next);
                tree.push((at, picked.len() - 1));
                at = picked.len() - 1;
            }
        }
    }
    if picked.len() < n {
        return None;
    }
    let tree_set: BTreeSet<(usize, usize)> = tree.iter().copied().collect();
    let mut extra: Vec<(usize, usize)> = (0..n)
        .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
        .filter(|&(a, b)| g.has_edge(picked[a], picked[b]) && !tree_set.contains(&(a, b)))
        .collect();
    extra.shuffle(rng);
    let mut edges = tree;
    match spec.category {
        QueryCategory::Tree => {}
        QueryCategory::Dense => edges.extend(extra),
        QueryCategory::Sparse => {
            // Keep a random subset of the induced extras below average degree 3.
            let limit = (3 * n).div_ceil(2) - 1;
            let room = limit.saturating_sub(edges.len());
            let keep = if room == 0 { 0 } else { rng.gen_range(0..=room.min(extra.len())) };
            edges.extend(extra.into_iter().take(keep));
        }
    }
    let labels = picked.iter().map(|&v| g.label(v).unwrap_or(0)).collect();
    let e: Vec<_> = edges.into_iter().map(|(a, b)| (a, b, None)).collect();
    let q = QueryGraph::new(labels, &e).ok()?;
    spec.category.admits(&q).then_some(q)
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GeneratedStream {
    pub batches: Vec<UpdateBatch>,
    pub warnings: Vec<String>,
}

/// Samples `rate · |E|` updates and partitions them into contiguous batches.
/// Deletions come from existing edges and insertions from non-edges whose
/// endpoint labels already occur together on some edge; both stay inside the
/// k-core in density mode.
pub fn generate_stream<R: Rng>(g: &GraphSnapshot, spec: &StreamSpec, rng: &mut R) -> Result<GeneratedStream, GenerateError> {
    if !(spec.rate > 0.0 && spec.rate <= 1.0) {
        return Err(GenerateError::Rate(spec.rate));
    }
    if let Some(k) = spec.core_k {
        if ![4, 8, 12].contains(&k) {
            return Err(GenerateError::CoreK(k));
        }
    }
    let edges = g.edge_count();
    let total = (spec.rate * edges as f64).round() as usize;
    if total == 0 {
        return Err(GenerateError::RateTooSmall { rate: spec.rate, edges });
    }
    let (n_ins, n_del) = match spec.mode {
        StreamMode::Insert => (total, 0),
        StreamMode::Delete => (0, total),
        StreamMode::Mixed => (total - total / 3, total / 3),
    };
    let eligible: Vec<bool> = match spec.core_k {
        Some(k) => core_numbers(g).into_iter().map(|c| c >= k).collect(),
        None => (0..g.id_bound() as VertexId).map(|v| g.label(v).is_some()).collect(),
    };
    let pool: Vec<VertexId> = (0..eligible.len() as VertexId).filter(|&v| eligible[v as usize]).collect();

    let mut existing: Vec<(VertexId, VertexId)> = Vec::new();
    let mut label_pairs = HashSet::new();
    let mut edge_labels: Vec<Label> = Vec::new();
    for u in g.vertices() {
        for (i, &v) in g.neighbors(u).iter().enumerate() {
            if u < v {
                let (lu, lv) = (g.label(u).unwrap_or(0), g.label(v).unwrap_or(0));
                label_pairs.insert((lu.min(lv), lu.max(lv)));
                if let Some(l) = g.edge_label_at(u, i) {
                    edge_labels.push(l);
                }
                if eligible[u as usize] && eligible[v as usize] {
                    existing.push((u, v));
                }
            }
        }
    }
    if existing.len() < n_del {
        return Err(GenerateError::InsufficientEdges { needed: n_del, found: existing.len() });
    }
    let deletions: Vec<(VertexId, VertexId)> = existing.choose_multiple(rng, n_del).copied().collect();

    let mut chosen = HashSet::with_capacity(n_ins);
    let mut insertions = Vec::with_capacity(n_ins);
    let mut tries = 0usize;
    let max_tries = 100 * n_ins + 10_000;
    while insertions.len() < n_ins {
        if tries == max_tries || pool.len() < 2 {
            return Err(GenerateError::InsufficientNonEdges { needed: n_ins });
        }
        tries += 1;
        let (&u, &v) = (pool.choose(rng).unwrap(), pool.choose(rng).unwrap());
        if u == v {
            continue;
        }
        let key = (u.min(v), u.max(v));
        let (lu, lv) = (g.label(u).unwrap_or(0), g.label(v).unwrap_or(0));
        if g.has_edge(u, v) || !label_pairs.contains(&(lu.min(lv), lu.max(lv))) || !chosen.insert(key) {
            continue;
        }
        let up = match edge_labels.choose(rng) {
            Some(&l) => EdgeUpdate::insert_labeled(key.0, key.1, l),
            None => EdgeUpdate::insert(key.0, key.1),
        };
        insertions.push(up);
    }

    let mut updates = Vec::with_capacity(total);
    let mut ins = insertions.into_iter();
    let mut del = deletions.into_iter().map(|(u, v)| EdgeUpdate::delete(u, v));
    for i in 0..total {
        let next = if spec.mode == StreamMode::Mixed && i % 3 == 2 { del.next().or_else(|| ins.next()) } else { ins.next().or_else(|| del.next()) };
        updates.extend(next);
    }

    let mut warnings = Vec::new();
    let mut count = spec.batches.max(1);
    if count > updates.len() {
        warnings.push(format!("{count} batches requested for {} updates; using {}", updates.len(), updates.len()));
        count = updates.len();
    }
    let mut batches = Vec::with_capacity(count);
    let (base, extra) = (updates.len() / count, updates.len() % count);
    let mut it = updates.into_iter();
    for i in 0..count {
        let size = base + usize::from(i < extra);
        let batch = UpdateBatch::new(it.by_ref().take(size)).expect("sampled updates are distinct and valid");
        batches.push(batch);
    }
    if batches.iter().any(|b| b.len() == 1) {
        warnings.push("stream contains single-update batches; batch-dynamic matching expects more than one update per batch".into());
    }
    for w in &warnings {
        log::warn!("{w}");
    }
    Ok(GeneratedStream { batches, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use bdsm_core::graph::LabeledGraph;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn graph(seed: u64) -> GraphSnapshot {
        let spec = SyntheticSpec { vertices: 300, edges: 2400, labels: 3, communities: 20, intra: 0.8 };
        let r = synthetic_graph(&spec, &mut ChaCha8Rng::seed_from_u64(seed));
        LabeledGraph::build_from_edges(&r.vertices, &r.edges).unwrap().snapshot()
    }

    #[test]
    fn spec_parsing() {
        let q: QuerySpec = "tree,6,20".parse().unwrap();
        assert_eq!(q, QuerySpec { category: QueryCategory::Tree, size: 6, count: 20 });
        let s: StreamSpec = "6%,mixed,4".parse().unwrap();
        assert!((s.rate - 0.06).abs() < 1e-12);
        assert_eq!((s.mode, s.batches, s.core_k), (StreamMode::Mixed, 4, None));
        assert_eq!("0.1,insert,2,8".parse::<StreamSpec>().unwrap().core_k, Some(8));
        assert!("tree,6".parse::<QuerySpec>().is_err());
        assert!("x,insert,2".parse::<StreamSpec>().is_err());
    }

    #[test]
    fn core_numbers_of_small_graphs() {
        // K4 plus a pendant vertex.
        let g = LabeledGraph::build_from_edges(
            &(0..5).map(|v| (v, 0)).collect::<Vec<_>>(),
            &[(0, 1, None), (0, 2, None), (0, 3, None), (1, 2, None), (1, 3, None), (2, 3, None), (3, 4, None)],
        )
        .unwrap();
        assert_eq!(core_numbers(&g.snapshot()), vec![3, 3, 3, 3, 1]);
    }

    #[test]
    fn queries_fit_categories() {
        let g = graph(1);
        for cat in QueryCategory::ALL {
            for size in [4, 6, 8] {
                let spec = QuerySpec { category: cat, size, count: 10 };
                let qs = generate_queries(&g, &spec, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
                assert_eq!(qs.len(), 10);
                for q in &qs {
                    assert_eq!(q.len(), size);
                    assert!(cat.admits(q));
                }
                if cat == QueryCategory::Tree {
                    assert!(qs.iter().all(|q| q.edge_count() == size - 1));
                }
                let again = generate_queries(&g, &spec, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
                assert_eq!(format!("{qs:?}"), format!("{again:?}"));
            }
        }
        assert_eq!(
            generate_queries(&g, &QuerySpec::new(QueryCategory::Tree, 3), &mut ChaCha8Rng::seed_from_u64(0)),
            Err(GenerateError::QuerySize(3))
        );
    }

    #[test]
    fn dense_on_a_tree_graph_fails_explicitly() {
        let path = LabeledGraph::build_from_edges(
            &(0..20).map(|v| (v, 0)).collect::<Vec<_>>(),
            &(0..19).map(|v| (v, v + 1, None)).collect::<Vec<_>>(),
        )
        .unwrap();
        let spec = QuerySpec { category: QueryCategory::Dense, size: 4, count: 1 };
        assert!(matches!(
            generate_queries(&path.snapshot(), &spec, &mut ChaCha8Rng::seed_from_u64(0)),
            Err(GenerateError::Unsatisfiable { .. })
        ));
    }

    #[test]
    fn streams_are_valid_and_reproducible() {
        let g = graph(2);
        for mode in [StreamMode::Insert, StreamMode::Delete, StreamMode::Mixed] {
            let spec = StreamSpec { rate: 0.06, mode, batches: 5, core_k: None };
            let s = generate_stream(&g, &spec, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
            let total: usize = s.batches.iter().map(UpdateBatch::len).sum();
            assert_eq!(total, (0.06 * 2400f64).round() as usize);
            assert_eq!(s.batches.len(), 5);
            for b in &s.batches {
                for up in b {
                    assert_eq!(g.has_edge(up.u, up.v), up.op == bdsm_core::graph::UpdateOp::Delete);
                }
            }
            if mode == StreamMode::Mixed {
                let ins = s.batches.iter().flat_map(|b| b.insertions()).count();
                assert_eq!(ins, total - total / 3);
            }
            let again = generate_stream(&g, &spec, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
            assert_eq!(s, again);
        }
    }

    #[test]
    fn stream_boundaries() {
        let g = graph(3);
        let tiny = StreamSpec { rate: 1.0 / 2400.0, mode: StreamMode::Insert, batches: 1, core_k: None };
        let s = generate_stream(&g, &tiny, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(s.batches[0].len(), 1);
        assert!(!s.warnings.is_empty());
        let none = StreamSpec { rate: 1e-9, ..tiny };
        assert!(matches!(generate_stream(&g, &none, &mut ChaCha8Rng::seed_from_u64(0)), Err(GenerateError::RateTooSmall { .. })));
        let bad_k = StreamSpec { core_k: Some(5), ..StreamSpec::default() };
        assert_eq!(generate_stream(&g, &bad_k, &mut ChaCha8Rng::seed_from_u64(0)), Err(GenerateError::CoreK(5)));
    }

    #[test]
    fn core_mode_stays_in_core() {
        let g = graph(4);
        let core = core_numbers(&g);
        let spec = StreamSpec { rate: 0.05, mode: StreamMode::Mixed, batches: 3, core_k: Some(8) };
        let s = generate_stream(&g, &spec, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        for up in s.batches.iter().flatten() {
            assert!(core[up.u as usize] >= 8 && core[up.v as usize] >= 8);
        }
    }
}
