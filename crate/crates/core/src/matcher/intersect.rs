//! Galloping search over sorted adjacency lists, with probe counting.

use crate::graph::VertexId;

/// Index of the first element `>= x` in `list[from..]`, found by doubling
/// the step from `from` and then bisecting. Adds every comparison to `ops`.
#[inline]
pub fn gallop(list: &[VertexId], from: usize, x: VertexId, ops: &mut u64) -> usize {
    let n = list.len();
    if from >= n {
        return n;
    }
    *ops += 1;
    if list[from] >= x {
        return from;
    }
    let mut lo = from;
    let mut step = 1;
    let mut hi = loop {
        let probe = lo + step;
        if probe >= n {
            break n;
        }
        *ops += 1;
        if list[probe] >= x {
            break probe;
        }
        lo = probe;
        step <<= 1;
    };
    // Invariant: list[lo] < x and (hi == n or list[hi] >= x).
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        *ops += 1;
        if list[mid] >= x {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Sorted intersection of `a` and `b`, probing the larger list.
pub fn intersect(a: &[VertexId], b: &[VertexId], ops: &mut u64) -> Vec<VertexId> {
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let mut out = Vec::with_capacity(small.len());
    let mut pos = 0;
    for &x in small {
        *ops += 1;
        pos = gallop(large, pos, x, ops);
        if pos == large.len() {
            break;
        }
        if large[pos] == x {
            out.push(x);
            pos += 1;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn gallop_positions() {
        let l = [1, 3, 5, 7, 9, 11];
        let mut ops = 0;
        assert_eq!(gallop(&l, 0, 0, &mut ops), 0);
        assert_eq!(gallop(&l, 0, 7, &mut ops), 3);
        assert_eq!(gallop(&l, 2, 8, &mut ops), 4);
        assert_eq!(gallop(&l, 0, 12, &mut ops), 6);
        assert_eq!(gallop(&l, 6, 1, &mut ops), 6);
    }

    proptest! {
        #[test]
        fn intersect_matches_sets(mut a in prop::collection::vec(0u32..500, 0..120), mut b in prop::collection::vec(0u32..500, 0..120)) {
            a.sort_unstable(); a.dedup();
            b.sort_unstable(); b.dedup();
            let mut ops = 0;
            let got = intersect(&a, &b, &mut ops);
            let expect: Vec<u32> = a.iter().copied().filter(|x| b.binary_search(x).is_ok()).collect();
            prop_assert_eq!(got, expect);
            let (s, l) = (a.len().min(b.len()) as u64, a.len().max(b.len()) as u64);
            let log = 64 - l.max(1).leading_zeros() as u64;
            prop_assert!(ops <= s * (2 * log + 3));
        }
    }
}
