//! k-degenerated automorphic subgraphs and their equivalent edge sets.

use serde::Serialize;

use super::automorphism::{enumerate_automorphisms, is_identity, Perm};
use super::graph::{bits, QueryGraph, QueryVertex};

/// Induced subgraph on `retained` (|V(Q)| − k vertices) with a non-identity
/// automorphism, together with one class of mutually equivalent edges.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DegeneratedAutomorphicSubgraph {
    pub k: usize,
    pub retained: u32,
    pub removed: u32,
    /// Edge ids, ascending.
    pub edges: Vec<usize>,
    /// Non-identity automorphisms of the induced subgraph.
    pub mappings: Vec<Perm>,
    pub prioritized_edge: Option<usize>,
}

impl DegeneratedAutomorphicSubgraph {
    pub fn retained_vertices(&self) -> Vec<QueryVertex> {
        bits(self.retained).collect()
    }

    pub fn removed_vertices(&self) -> Vec<QueryVertex> {
        bits(self.removed).collect()
    }
}

/// Cap on induced subsets examined for one query; keeps very large queries tractable.
pub const SUBSET_BUDGET: usize = 1 << 17;

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind((0..n).collect())
    }

    fn find(&mut self, x: usize) -> usize {
        let p = self.0[x];
        if p == x {
            return x;
        }
        let r = self.find(p);
        self.0[x] = r;
        r
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Calls `f` with every `k`-subset of `0..n` as a mask, in lexicographic order.
fn for_each_subset(n: usize, k: usize, mut f: impl FnMut(u32) -> bool) {
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        let mask = idx.iter().fold(0u32, |m, &i| m | 1 << i);
        if !f(mask) {
            return;
        }
        let mut i = k;
        while i > 0 && idx[i - 1] == n - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return;
        }
        idx[i - 1] += 1;
        for j in i..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Edge classes of the subgraph induced by `mask` under the given automorphisms.
pub fn edge_orbits(q: &QueryGraph, mask: u32, autos: &[Perm]) -> Vec<Vec<usize>> {
    let inside: Vec<usize> = (0..q.edge_count())
        .filter(|&e| {
            let ed = q.edge(e);
            mask >> ed.a & 1 == 1 && mask >> ed.b & 1 == 1
        })
        .collect();
    let mut uf = UnionFind::new(q.edge_count());
    for sigma in autos {
        for &e in &inside {
            let ed = q.edge(e);
            let image = q.edge_id(sigma[ed.a], sigma[ed.b]).expect("automorphism preserves edges");
            uf.union(e, image);
        }
    }
    let mut classes: Vec<Vec<usize>> = Vec::new();
    let mut root_of = std::collections::HashMap::new();
    for &e in &inside {
        let r = uf.find(e);
        let slot = *root_of.entry(r).or_insert_with(|| {
            classes.push(Vec::new());
            classes.len() - 1
        });
        classes[slot].push(e);
    }
    classes
}

/// Every connected induced subgraph obtained by removing `k ≤ max_k` vertices
/// that has a non-identity automorphism, one entry per edge class of at
/// least two edges. Overlaps are not resolved.
pub fn candidate_entries(q: &QueryGraph, max_k: Option<usize>) -> Vec<DegeneratedAutomorphicSubgraph> {
    let n = q.len();
    let max_k = max_k.unwrap_or(n.saturating_sub(3)).min(n.saturating_sub(2));
    let full = q.full_mask();
    let mut out = Vec::new();
    let mut examined = 0usize;
    for k in 0..=max_k {
        let mut over_budget = false;
        for_each_subset(n, k, |removed| {
            examined += 1;
            if examined > SUBSET_BUDGET {
                over_budget = true;
                return false;
            }
            let retained = full & !removed;
            if !q.is_connected_subset(retained) {
                return true;
            }
            let mut labels: Vec<_> = bits(retained).map(|u| q.label(u)).collect();
            labels.sort_unstable();
            if labels.windows(2).all(|w| w[0] != w[1]) {
                return true;
            }
            let mappings: Vec<Perm> = enumerate_automorphisms(q, retained)
                .into_iter()
                .filter(|p| !is_identity(p))
                .collect();
            if mappings.is_empty() {
                return true;
            }
            for class in edge_orbits(q, retained, &mappings) {
                if class.len() >= 2 {
                    out.push(DegeneratedAutomorphicSubgraph {
                        k,
                        retained,
                        removed,
                        edges: class,
                        mappings: mappings.clone(),
                        prioritized_edge: None,
                    });
                }
            }
            true
        });
        if over_budget {
            log::warn!("automorphic subgraph search stopped at k={k} after {SUBSET_BUDGET} subsets");
            break;
        }
    }
    out
}

/// Makes equivalent edge sets pairwise disjoint. An edge shared by several
/// entries stays only in the one with the smallest `k`, then the largest
/// original edge set, then the lowest index. Sets left with fewer than two
/// edges are dropped.
pub fn resolve_overlaps(entries: Vec<DegeneratedAutomorphicSubgraph>) -> Vec<DegeneratedAutomorphicSubgraph> {
    let sizes: Vec<usize> = entries.iter().map(|e| e.edges.len()).collect();
    let mut owner: std::collections::HashMap<usize, usize> = std::collections::HashMap::new();
    for (i, entry) in entries.iter().enumerate() {
        for &e in &entry.edges {
            owner
                .entry(e)
                .and_modify(|cur| {
                    let better = (entries[i].k, std::cmp::Reverse(sizes[i]), i)
                        < (entries[*cur].k, std::cmp::Reverse(sizes[*cur]), *cur);
                    if better {
                        *cur = i;
                    }
                })
                .or_insert(i);
        }
    }
    entries
        .into_iter()
        .enumerate()
        .filter_map(|(i, mut entry)| {
            entry.edges.retain(|e| owner[e] == i);
            (entry.edges.len() >= 2).then_some(entry)
        })
        .collect()
}

/// `a ⊇ b` for sorted multisets.
fn multiset_contains(a: &[u32], b: &[u32]) -> bool {
    let mut i = 0;
    for &x in b {
        while i < a.len() && a[i] < x {
            i += 1;
        }
        if i == a.len() || a[i] != x {
            return false;
        }
        i += 1;
    }
    true
}

/// An automorphism mapping `from` onto `to` (in some orientation) under which
/// each endpoint of `from` has at least the neighbor labels of its image.
pub fn dominates(q: &QueryGraph, entry: &DegeneratedAutomorphicSubgraph, from: usize, to: usize) -> bool {
    if from == to {
        return true;
    }
    let f = q.edge(from);
    let t = q.edge(to);
    entry.mappings.iter().any(|s| {
        let (x, y) = (s[f.a], s[f.b]);
        if (x.min(y), x.max(y)) != (t.a, t.b) {
            return false;
        }
        multiset_contains(&q.neighbor_labels(f.a), &q.neighbor_labels(x))
            && multiset_contains(&q.neighbor_labels(f.b), &q.neighbor_labels(y))
    })
}

/// Picks the edge dominating the most others (lowest id on ties). Edges it
/// does not dominate are split off and handled the same way; singleton
/// leftovers are dropped. The first returned entry is the original set's.
pub fn select_prioritized_edge(
    entry: &DegeneratedAutomorphicSubgraph,
    q: &QueryGraph,
) -> Vec<DegeneratedAutomorphicSubgraph> {
    let mut remaining = entry.edges.clone();
    let mut out = Vec::new();
    while remaining.len() >= 2 {
        let best = *remaining
            .iter()
            .max_by_key(|&&e| {
                let wins = remaining.iter().filter(|&&o| dominates(q, entry, e, o)).count();
                (wins, std::cmp::Reverse(e))
            })
            .unwrap();
        let (taken, rest): (Vec<usize>, Vec<usize>) =
            remaining.iter().partition(|&&o| dominates(q, entry, best, o));
        if taken.len() >= 2 {
            out.push(DegeneratedAutomorphicSubgraph {
                edges: taken,
                prioritized_edge: Some(best),
                ..entry.clone()
            });
        }
        remaining = rest;
    }
    out
}

/// Candidate entries, overlap-resolved and split by dominance.
pub fn find_k_degenerated_subgraphs(q: &QueryGraph, max_k: Option<usize>) -> Vec<DegeneratedAutomorphicSubgraph> {
    resolve_overlaps(candidate_entries(q, max_k))
        .iter()
        .flat_map(|e| select_prioritized_edge(e, q))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn running_query() -> QueryGraph {
        QueryGraph::new(vec![1, 2, 2, 3], &[(0, 1, None), (0, 2, None), (1, 2, None), (1, 3, None)]).unwrap()
    }

    #[test]
    fn subsets_enumerate_in_order() {
        let mut seen = vec![];
        for_each_subset(4, 2, |m| {
            seen.push(m);
            true
        });
        assert_eq!(seen, vec![0b0011, 0b0101, 0b1001, 0b0110, 0b1010, 0b1100]);
        let mut none = vec![];
        for_each_subset(3, 0, |m| {
            none.push(m);
            true
        });
        assert_eq!(none, vec![0]);
    }

    #[test]
    fn running_example_entry() {
        let q = running_query();
        let entries = find_k_degenerated_subgraphs(&q, None);
        assert_eq!(entries.len(), 1);
        let e = &entries[0];
        assert_eq!(e.k, 1);
        assert_eq!(e.retained_vertices(), vec![0, 1, 2]);
        assert_eq!(e.removed_vertices(), vec![3]);
        assert_eq!(e.edges, vec![0, 1]);
        assert!(e.mappings.contains(&vec![0, 2, 1, 3]));
        assert_eq!(e.prioritized_edge, Some(0));
    }

    #[test]
    fn asymmetric_query_has_no_entries() {
        let q = QueryGraph::new(vec![1, 2, 3, 4], &[(0, 1, None), (1, 2, None), (2, 3, None), (0, 2, None)]).unwrap();
        assert!(find_k_degenerated_subgraphs(&q, None).is_empty());
    }

    #[test]
    fn uniform_star_is_one_orbit() {
        let q = QueryGraph::new(vec![1, 2, 2, 2], &[(0, 1, None), (0, 2, None), (0, 3, None)]).unwrap();
        let entries = find_k_degenerated_subgraphs(&q, None);
        assert_eq!(entries[0].k, 0);
        assert_eq!(entries[0].edges, vec![0, 1, 2]);
        assert_eq!(entries[0].mappings.len(), 5);
    }

    #[test]
    fn lower_k_wins_shared_edges() {
        let base = DegeneratedAutomorphicSubgraph {
            k: 1,
            retained: 0b0111,
            removed: 0b1000,
            edges: vec![0, 1],
            mappings: vec![vec![0, 2, 1, 3]],
            prioritized_edge: None,
        };
        let other = DegeneratedAutomorphicSubgraph { k: 2, edges: vec![1, 2, 3], ..base.clone() };
        let out = resolve_overlaps(vec![other, base.clone()]);
        assert_eq!(out[0].edges, vec![2, 3]);
        assert_eq!(out[1], base);
        let tie = DegeneratedAutomorphicSubgraph { edges: vec![0, 2, 3], ..base.clone() };
        let out = resolve_overlaps(vec![base.clone(), tie]);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].edges, vec![0, 2, 3]);
        assert_eq!(resolve_overlaps(vec![base.clone()]), vec![base]);
    }

    #[test]
    fn symmetric_pair_picks_lower_id() {
        let q = QueryGraph::new(vec![1, 2, 2], &[(0, 2, None), (0, 1, None)]).unwrap();
        let entries = find_k_degenerated_subgraphs(&q, None);
        assert_eq!(entries[0].prioritized_edge, Some(0));
        assert!(dominates(&q, &entries[0], 1, 0));
    }

    #[test]
    fn multiset_containment() {
        assert!(multiset_contains(&[1, 2, 2, 3], &[2, 2]));
        assert!(!multiset_contains(&[1, 2, 3], &[2, 2]));
        assert!(multiset_contains(&[1], &[]));
    }
}
