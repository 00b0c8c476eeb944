//! Automorphisms of induced query subgraphs.
//!
//! A mapping is stored as a full-length permutation of the query vertices
//! that is the identity outside the subset it was computed for.

use super::graph::{bits, QueryGraph, QueryVertex};

pub type Perm = Vec<QueryVertex>;

pub fn identity(n: usize) -> Perm {
    (0..n).collect()
}

pub fn is_identity(p: &[QueryVertex]) -> bool {
    p.iter().enumerate().all(|(i, &x)| i == x)
}

pub fn inverse(p: &[QueryVertex]) -> Perm {
    let mut out = vec![0; p.len()];
    for (i, &x) in p.iter().enumerate() {
        out[x] = i;
    }
    out
}

struct Search<'a> {
    q: &'a QueryGraph,
    mask: u32,
    order: Vec<QueryVertex>,
    image: Vec<Option<QueryVertex>>,
    /// Induced degree of each vertex inside `mask`.
    degree: Vec<u32>,
}

impl<'a> Search<'a> {
    fn new(q: &'a QueryGraph, mask: u32) -> Self {
        let degree = (0..q.len())
            .map(|u| (q.neighbor_mask(u) & mask).count_ones())
            .collect();
        // Connected-first order so adjacency checks prune early.
        let mut order = Vec::new();
        let mut placed = 0u32;
        while placed != mask {
            let frontier = bits(mask & !placed)
                .max_by_key(|&u| ((q.neighbor_mask(u) & placed).count_ones(), std::cmp::Reverse(u)))
                .unwrap();
            order.push(frontier);
            placed |= 1 << frontier;
        }
        Search { q, mask, order, image: vec![None; q.len()], degree }
    }

    fn consistent(&self, depth: usize, u: QueryVertex, x: QueryVertex) -> bool {
        let q = self.q;
        if q.label(u) != q.label(x) || self.degree[u] != self.degree[x] {
            return false;
        }
        self.order[..depth].iter().all(|&w| {
            let y = self.image[w].unwrap();
            q.adjacent(u, w) == q.adjacent(x, y) && q.edge_label(u, w) == q.edge_label(x, y)
        })
    }

    fn run(&mut self, depth: usize, used: u32, fixed: &[(QueryVertex, QueryVertex)], out: &mut Vec<Perm>, limit: usize) {
        if out.len() >= limit {
            return;
        }
        if depth == self.order.len() {
            let mut p = identity(self.q.len());
            for &u in &self.order {
                p[u] = self.image[u].unwrap();
            }
            out.push(p);
            return;
        }
        let u = self.order[depth];
        let forced = fixed.iter().find(|&&(a, _)| a == u).map(|&(_, b)| b);
        let choices = match forced {
            Some(b) => 1u32 << b,
            None => self.mask & !used,
        };
        for x in bits(choices & !used) {
            if self.consistent(depth, u, x) {
                self.image[u] = Some(x);
                self.run(depth + 1, used | 1 << x, fixed, out, limit);
                self.image[u] = None;
            }
        }
    }
}

/// Every label-, adjacency- and edge-label-preserving bijection of the
/// subgraph induced by `mask`, identity included, in lexicographic order of
/// the search.
pub fn enumerate_automorphisms(q: &QueryGraph, mask: u32) -> Vec<Perm> {
    let mut out = Vec::new();
    Search::new(q, mask).run(0, 0, &[], &mut out, usize::MAX);
    out
}

/// First automorphism of the induced subgraph that sends each `(from, to)` pair as given.
pub fn find_automorphism(q: &QueryGraph, mask: u32, fixed: &[(QueryVertex, QueryVertex)]) -> Option<Perm> {
    if fixed.iter().any(|&(a, b)| mask >> a & 1 == 0 || mask >> b & 1 == 0) {
        return None;
    }
    let mut out = Vec::new();
    Search::new(q, mask).run(0, 0, fixed, &mut out, 1);
    out.pop()
}

/// True if `p` restricted to `mask` is an automorphism of the induced subgraph.
pub fn is_automorphism(q: &QueryGraph, mask: u32, p: &[QueryVertex]) -> bool {
    let members: Vec<_> = bits(mask).collect();
    let image_mask = members.iter().fold(0u32, |m, &u| m | 1 << p[u]);
    if image_mask != mask || (0..q.len()).any(|u| mask >> u & 1 == 0 && p[u] != u) {
        return false;
    }
    members.iter().all(|&u| {
        q.label(u) == q.label(p[u])
            && members.iter().all(|&w| {
                q.adjacent(u, w) == q.adjacent(p[u], p[w]) && q.edge_label(u, w) == q.edge_label(p[u], p[w])
            })
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_perms(n: usize) -> Vec<Perm> {
        let mut out = vec![];
        let mut p = identity(n);
        fn heap(k: usize, p: &mut Perm, out: &mut Vec<Perm>) {
            if k == 1 {
                out.push(p.clone());
                return;
            }
            for i in 0..k {
                heap(k - 1, p, out);
                let j = if k.is_multiple_of(2) { i } else { 0 };
                p.swap(j, k - 1);
            }
        }
        heap(n, &mut p, &mut out);
        out
    }

    #[test]
    fn clique_has_factorial_automorphisms() {
        let edges: Vec<_> = (0..4).flat_map(|a| (a + 1..4).map(move |b| (a, b, None))).collect();
        let q = QueryGraph::new(vec![0; 4], &edges).unwrap();
        let autos = enumerate_automorphisms(&q, q.full_mask());
        assert_eq!(autos.len(), 24);
        let brute = all_perms(4).into_iter().filter(|p| is_automorphism(&q, q.full_mask(), p)).count();
        assert_eq!(brute, 24);
    }

    #[test]
    fn distinct_triangle_is_rigid() {
        let q = QueryGraph::new(vec![1, 2, 3], &[(0, 1, None), (1, 2, None), (0, 2, None)]).unwrap();
        assert_eq!(enumerate_automorphisms(&q, q.full_mask()), vec![identity(3)]);
    }

    #[test]
    fn edge_labels_break_symmetry() {
        let q = QueryGraph::new(vec![0; 3], &[(0, 1, Some(1)), (0, 2, Some(2))]).unwrap();
        assert_eq!(enumerate_automorphisms(&q, q.full_mask()).len(), 1);
    }

    #[test]
    fn forced_images() {
        let q = QueryGraph::new(vec![0; 4], &[(0, 1, None), (1, 2, None), (2, 3, None)]).unwrap();
        assert_eq!(find_automorphism(&q, q.full_mask(), &[(0, 3)]), Some(vec![3, 2, 1, 0]));
        assert_eq!(find_automorphism(&q, q.full_mask(), &[(0, 1)]), None);
        // Subset {1,2} is a single edge; its swap leaves 0 and 3 fixed.
        assert_eq!(find_automorphism(&q, 0b0110, &[(1, 2)]), Some(vec![0, 2, 1, 3]));
    }

    #[test]
    fn random_graphs_match_brute_force() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let n = rng.gen_range(2..=6);
            let labels: Vec<u32> = (0..n).map(|_| rng.gen_range(0..2)).collect();
            let mut edges: Vec<_> = (1..n).map(|v| (rng.gen_range(0..v), v, None)).collect();
            for a in 0..n {
                for b in a + 1..n {
                    if rng.gen_bool(0.3) && !edges.iter().any(|&(x, y, _)| (x.min(y), x.max(y)) == (a, b)) {
                        edges.push((a, b, None));
                    }
                }
            }
            let q = QueryGraph::new(labels, &edges).unwrap();
            let mut expect: Vec<Perm> = all_perms(n).into_iter().filter(|p| is_automorphism(&q, q.full_mask(), p)).collect();
            let mut got = enumerate_automorphisms(&q, q.full_mask());
            expect.sort();
            got.sort();
            assert_eq!(got, expect);
        }
    }
}
