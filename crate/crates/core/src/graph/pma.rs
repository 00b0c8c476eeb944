//! Packed memory array holding directed edge keys in sorted order.
//!
//! The array is split into power-of-two segments. An implicit binary tree
//! over the segments bounds the density of every node: leaves may range over
//! `leaf` bounds, the root over `root` bounds, and intermediate heights are
//! linearly interpolated. Batches are bucketed by leaf segment and each
//! bucket is materialized at the lowest node whose density stays in bounds.

use std::collections::BTreeMap;

/// Marker stored in free slots. No valid key has source `u32::MAX`.
pub(crate) const EMPTY: u64 = u64::MAX;

/// Smallest capacity, which is also the smallest segment size.
pub const MIN_CAPACITY: usize = 8;

/// Packs a directed edge into its sort key.
#[inline]
pub fn edge_key(source: u32, target: u32) -> u64 {
    ((source as u64) << 32) | target as u64
}

#[inline]
pub fn key_source(key: u64) -> u32 {
    (key >> 32) as u32
}

#[inline]
pub fn key_target(key: u64) -> u32 {
    key as u32
}

/// Density thresholds of leaves and root; intermediate heights interpolate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensityBounds {
    pub leaf: (f64, f64),
    pub root: (f64, f64),
}

impl Default for DensityBounds {
    fn default() -> Self {
        DensityBounds {
            leaf: (0.08, 0.92),
            root: (0.30, 0.70),
        }
    }
}

/// Segment size for a capacity: smallest power of two ≥ log2(capacity), at least 8.
pub fn segment_size_for(capacity: usize) -> usize {
    let log = capacity.max(2).trailing_zeros() as usize;
    log.next_power_of_two().max(MIN_CAPACITY)
}

#[derive(Default, Debug)]
struct Pending {
    inserts: Vec<u64>,
    deletes: Vec<u64>,
}

impl Pending {
    fn merge(&mut self, other: Pending) {
        self.inserts.extend(other.inserts);
        self.deletes.extend(other.deletes);
    }
}

#[derive(Clone, Debug)]
pub struct Pma {
    slots: Vec<u64>,
    segment_size: usize,
    height: u32,
    /// Heap-ordered occupancy counts; node 1 is the root, leaves start at `segments()`.
    tree: Vec<usize>,
    /// First key per segment (`EMPTY` for an empty segment): the location cache.
    firsts: Vec<u64>,
    len: usize,
    bounds: DensityBounds,
}

impl Default for Pma {
    fn default() -> Self {
        Pma::with_bounds(DensityBounds::default())
    }
}

impl Pma {
    pub fn with_bounds(bounds: DensityBounds) -> Self {
        let mut pma = Pma {
            slots: Vec::new(),
            segment_size: MIN_CAPACITY,
            height: 0,
            tree: Vec::new(),
            firsts: Vec::new(),
            len: 0,
            bounds,
        };
        pma.rebuild(Vec::new());
        pma
    }

    /// Builds from keys that are sorted and unique.
    pub fn from_sorted(keys: Vec<u64>, bounds: DensityBounds) -> Self {
        debug_assert!(keys.windows(2).all(|w| w[0] < w[1]));
        let mut pma = Pma::with_bounds(bounds);
        pma.rebuild(keys);
        pma
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn capacity(&self) -> usize {
        self.slots.len()
    }

    pub fn segment_size(&self) -> usize {
        self.segment_size
    }

    pub fn segments(&self) -> usize {
        self.slots.len() / self.segment_size
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn bounds(&self) -> DensityBounds {
        self.bounds
    }

    pub fn segment_occupancy(&self, segment: usize) -> usize {
        self.tree[self.segments() + segment]
    }

    /// First key of each segment, `None` for an empty segment.
    pub fn segment_firsts(&self) -> impl Iterator<Item = Option<u64>> + '_ {
        self.firsts.iter().map(|&k| (k != EMPTY).then_some(k))
    }

    /// Raw slot view (`None` for gaps).
    pub fn slots(&self) -> impl Iterator<Item = Option<u64>> + '_ {
        self.slots.iter().map(|&k| (k != EMPTY).then_some(k))
    }

    /// Allowed occupancy `(min, max)` for a node at height `h`.
    pub fn count_limits(&self, h: u32) -> (usize, usize) {
        let size = (self.segment_size << h) as f64;
        let (lo, hi) = if self.height == 0 {
            self.bounds.root
        } else {
            let t = h as f64 / self.height as f64;
            let (ll, lh) = self.bounds.leaf;
            let (rl, rh) = self.bounds.root;
            (ll + (rl - ll) * t, lh + (rh - lh) * t)
        };
        let mut min = (lo * size - 1e-9).ceil().max(0.0) as usize;
        let max = (hi * size + 1e-9).floor() as usize;
        // A minimum-size array cannot shrink further, so its root has no lower bound.
        if h == self.height && self.slots.len() <= MIN_CAPACITY {
            min = 0;
        }
        (min, max)
    }

    fn within(&self, h: u32, count: usize) -> bool {
        let (min, max) = self.count_limits(h);
        count >= min && count <= max
    }

    #[inline]
    fn node(&self, h: u32, j: usize) -> usize {
        (self.segments() >> h) + j
    }

    fn node_count(&self, h: u32, j: usize) -> usize {
        self.tree[self.node(h, j)]
    }

    fn window(&self, h: u32, j: usize) -> std::ops::Range<usize> {
        let w = self.segment_size << h;
        j * w..(j + 1) * w
    }

    /// Leaf segment whose key range contains `key`, found through the cached
    /// per-segment first keys.
    pub fn locate_segment(&self, key: u64) -> usize {
        if self.firsts.len() <= 1 {
            return 0;
        }
        // Empty leaves only exist in a single-segment array, so firsts are monotone here.
        let idx = self.firsts.partition_point(|&first| first <= key);
        idx.saturating_sub(1)
    }

    /// Same contract as [`Pma::locate_segment`] without the summary index.
    pub fn locate_segment_scan(&self, key: u64) -> usize {
        let mut found = 0;
        for (seg, chunk) in self.slots.chunks(self.segment_size).enumerate() {
            match chunk.iter().find(|&&k| k != EMPTY) {
                Some(&first) if first <= key => found = seg,
                Some(_) => break,
                None => {}
            }
        }
        found
    }

    pub fn contains(&self, key: u64) -> bool {
        let seg = self.locate_segment(key);
        let start = seg * self.segment_size;
        self.slots[start..start + self.segment_size].contains(&key)
    }

    /// Occupied keys `>= key` in ascending order.
    pub fn iter_from(&self, key: u64) -> impl Iterator<Item = u64> + '_ {
        let start = self.locate_segment(key) * self.segment_size;
        self.slots[start..]
            .iter()
            .copied()
            .filter(|&k| k != EMPTY)
            .skip_while(move |&k| k < key)
    }

    pub fn iter(&self) -> impl Iterator<Item = u64> + '_ {
        self.slots.iter().copied().filter(|&k| k != EMPTY)
    }

    /// Applies sorted, validated changes: every insert is absent, every delete present.
    pub fn apply(&mut self, inserts: &[u64], deletes: &[u64]) {
        if inserts.is_empty() && deletes.is_empty() {
            return;
        }
        let mut pending: BTreeMap<usize, Pending> = BTreeMap::new();
        for &k in inserts {
            pending.entry(self.locate_segment(k)).or_default().inserts.push(k);
        }
        for &k in deletes {
            pending.entry(self.locate_segment(k)).or_default().deletes.push(k);
        }

        let mut touched = Vec::new();
        for h in 0..=self.height {
            let mut escalated: BTreeMap<usize, Pending> = BTreeMap::new();
            for (j, changes) in std::mem::take(&mut pending) {
                let count = self.node_count(h, j) + changes.inserts.len() - changes.deletes.len();
                if self.within(h, count) {
                    self.materialize(h, j, changes);
                    touched.push((h, j));
                } else if h == self.height {
                    let keys = self.merged_keys(self.window(h, j), changes);
                    self.rebuild(keys);
                    return;
                } else {
                    escalated.entry(j >> 1).or_default().merge(changes);
                }
            }
            pending = escalated;
        }
        for (h, j) in touched {
            if self.settle(h, j) {
                return;
            }
        }
    }

    fn merged_keys(&self, range: std::ops::Range<usize>, mut changes: Pending) -> Vec<u64> {
        changes.inserts.sort_unstable();
        changes.deletes.sort_unstable();
        let mut out = Vec::with_capacity(changes.inserts.len() + range.len());
        let existing = self.slots[range].iter().copied().filter(|&k| k != EMPTY);
        let mut ins = changes.inserts.iter().copied().peekable();
        let mut del = changes.deletes.iter().copied().peekable();
        for k in existing {
            while let Some(&i) = ins.peek() {
                if i < k {
                    out.push(i);
                    ins.next();
                } else {
                    break;
                }
            }
            while del.peek().is_some_and(|&d| d < k) {
                del.next();
            }
            if del.peek() == Some(&k) {
                del.next();
                continue;
            }
            out.push(k);
        }
        out.extend(ins);
        out
    }

    fn materialize(&mut self, h: u32, j: usize, changes: Pending) {
        let range = self.window(h, j);
        let keys = self.merged_keys(range.clone(), changes);
        self.spread(h, j, &keys);
    }

    /// Rewrites a window with `keys` spaced evenly and refreshes its counts.
    fn spread(&mut self, h: u32, j: usize, keys: &[u64]) {
        let range = self.window(h, j);
        let width = range.len();
        let old = self.node_count(h, j);
        self.slots[range.clone()].fill(EMPTY);
        let n = keys.len();
        for (i, &k) in keys.iter().enumerate() {
            self.slots[range.start + i * width / n] = k;
        }
        let first_seg = range.start / self.segment_size;
        let nseg = width / self.segment_size;
        let leaves = self.segments();
        for seg in first_seg..first_seg + nseg {
            let start = seg * self.segment_size;
            let chunk = &self.slots[start..start + self.segment_size];
            self.tree[leaves + seg] = chunk.iter().filter(|&&k| k != EMPTY).count();
            self.firsts[seg] = chunk.iter().copied().find(|&k| k != EMPTY).unwrap_or(EMPTY);
        }
        for level in 1..=h {
            let lo = (leaves >> level) + (j << (h - level));
            for node in lo..lo + (1 << (h - level)) {
                self.tree[node] = self.tree[2 * node] + self.tree[2 * node + 1];
            }
        }
        let mut node = self.node(h, j) >> 1;
        while node >= 1 {
            self.tree[node] = self.tree[2 * node] + self.tree[2 * node + 1];
            node >>= 1;
        }
        self.len = self.len + n - old;
    }

    /// Restores the density contract around a freshly written window: ancestors
    /// that left their bounds and rounding effects inside the window both
    /// escalate to the nearest valid ancestor. Returns true if the whole array
    /// was rebuilt.
    fn settle(&mut self, mut h: u32, mut j: usize) -> bool {
        let mut highest_bad = None;
        for up in h + 1..=self.height {
            let aj = j >> (up - h);
            if !self.within(up, self.node_count(up, aj)) {
                highest_bad = Some(up);
            }
        }
        if let Some(bad) = highest_bad {
            let valid = (bad + 1..=self.height).find(|&up| self.within(up, self.node_count(up, j >> (up - h))));
            match valid {
                Some(up) => {
                    let aj = j >> (up - h);
                    let keys = self.merged_keys(self.window(up, aj), Pending::default());
                    self.spread(up, aj, &keys);
                    j = aj;
                    h = up;
                }
                None => {
                    let keys: Vec<u64> = self.iter().collect();
                    self.rebuild(keys);
                    return true;
                }
            }
        }
        while !self.subtree_valid(h, j) {
            if h == self.height {
                let keys: Vec<u64> = self.iter().collect();
                self.rebuild(keys);
                return true;
            }
            h += 1;
            j >>= 1;
            let keys = self.merged_keys(self.window(h, j), Pending::default());
            self.spread(h, j, &keys);
        }
        false
    }

    fn subtree_valid(&self, h: u32, j: usize) -> bool {
        (0..=h).all(|level| {
            let lo = j << (h - level);
            (lo..lo + (1 << (h - level))).all(|jj| self.within(level, self.node_count(level, jj)))
        })
    }

    /// Chooses the capacity whose root density is closest to the middle of
    /// the root bounds and lays `keys` out evenly.
    fn rebuild(&mut self, keys: Vec<u64>) {
        let n = keys.len();
        let (rl, rh) = self.bounds.root;
        let target = (rl + rh) / 2.0;
        let mut best = MIN_CAPACITY;
        let mut best_gap = f64::INFINITY;
        let mut cap = MIN_CAPACITY;
        loop {
            let density = n as f64 / cap as f64;
            let fits = density <= rh + 1e-12 && (density >= rl - 1e-12 || cap == MIN_CAPACITY);
            if fits && (density - target).abs() < best_gap {
                best = cap;
                best_gap = (density - target).abs();
            }
            if density < rl / 2.0 {
                break;
            }
            cap *= 2;
        }
        self.layout(best, &keys);
        // Rounding can in principle push a small node across its bound; grow until valid.
        while !self.subtree_valid(self.height, 0) {
            let cap = self.slots.len() * 2;
            self.layout(cap, &keys);
        }
    }

    fn layout(&mut self, capacity: usize, keys: &[u64]) {
        self.segment_size = segment_size_for(capacity);
        let segments = capacity / self.segment_size;
        self.height = segments.trailing_zeros();
        self.slots = vec![EMPTY; capacity];
        self.tree = vec![0; 2 * segments];
        self.firsts = vec![EMPTY; segments];
        self.len = 0;
        let h = self.height;
        self.tree[1] = 0;
        self.spread(h, 0, keys);
    }

    /// Full structural check: order, density of every node, occupancy sums
    /// and the location cache.
    pub fn check_invariants(&self) -> Result<(), String> {
        let mut prev: Option<u64> = None;
        for &k in &self.slots {
            if k == EMPTY {
                continue;
            }
            if let Some(p) = prev {
                if p >= k {
                    return Err(format!("keys out of order: {p:#x} then {k:#x}"));
                }
            }
            prev = Some(k);
        }
        let leaves = self.segments();
        let mut total = 0;
        for seg in 0..leaves {
            let start = seg * self.segment_size;
            let chunk = &self.slots[start..start + self.segment_size];
            let occ = chunk.iter().filter(|&&k| k != EMPTY).count();
            if occ != self.tree[leaves + seg] {
                return Err(format!("segment {seg}: occupancy {occ} but summary says {}", self.tree[leaves + seg]));
            }
            let first = chunk.iter().copied().find(|&k| k != EMPTY).unwrap_or(EMPTY);
            if first != self.firsts[seg] {
                return Err(format!("segment {seg}: stale first key"));
            }
            total += occ;
        }
        if total != self.len {
            return Err(format!("occupancy sum {total} != len {}", self.len));
        }
        for h in 0..=self.height {
            for j in 0..(leaves >> h) {
                let node = self.node(h, j);
                let expect = if h == 0 {
                    self.tree[node]
                } else {
                    self.tree[2 * node] + self.tree[2 * node + 1]
                };
                if expect != self.tree[node] {
                    return Err(format!("node ({h},{j}) count mismatch"));
                }
                if !self.within(h, self.tree[node]) {
                    let (min, max) = self.count_limits(h);
                    return Err(format!(
                        "node ({h},{j}) holds {} outside [{min}, {max}]",
                        self.tree[node]
                    ));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    #[test]
    fn segment_size_rule() {
        assert_eq!(segment_size_for(8), 8);
        assert_eq!(segment_size_for(1 << 10), 16);
        assert_eq!(segment_size_for(1 << 16), 16);
        assert_eq!(segment_size_for(1 << 17), 32);
    }

    #[test]
    fn empty_array_is_one_segment() {
        let pma = Pma::default();
        assert_eq!(pma.segments(), 1);
        assert_eq!(pma.len(), 0);
        assert_eq!(pma.locate_segment(12345), 0);
        pma.check_invariants().unwrap();
    }

    #[test]
    fn root_bounds_drive_growth() {
        let mut pma = Pma::default();
        pma.apply(&[1, 2, 3, 4, 5], &[]);
        assert_eq!(pma.capacity(), 8);
        pma.apply(&[6], &[]);
        assert_eq!(pma.capacity(), 16);
        pma.check_invariants().unwrap();
        pma.apply(&[], &[1, 2, 3, 4, 5]);
        assert_eq!(pma.capacity(), 8);
        pma.check_invariants().unwrap();
    }

    #[test]
    fn locate_matches_first_keys() {
        let keys: Vec<u64> = (0..2000u64).map(|i| i * 3).collect();
        let pma = Pma::from_sorted(keys, DensityBounds::default());
        assert!(pma.segments() > 1);
        for (seg, first) in pma.segment_firsts().enumerate() {
            assert_eq!(pma.locate_segment(first.unwrap()), seg);
        }
    }

    #[test]
    fn deletions_shrink_and_keep_bounds() {
        let keys: Vec<u64> = (0..5000u64).collect();
        let mut pma = Pma::from_sorted(keys, DensityBounds::default());
        let cap = pma.capacity();
        let gone: Vec<u64> = (0..4900u64).collect();
        pma.apply(&[], &gone);
        pma.check_invariants().unwrap();
        assert!(pma.capacity() < cap);
        assert_eq!(pma.iter().collect::<Vec<_>>(), (4900..5000).collect::<Vec<_>>());
    }

    proptest! {
        #[test]
        fn batches_match_a_set(ops in prop::collection::vec(prop::collection::vec((0u64..400, any::<bool>()), 1..40), 1..30)) {
            let mut pma = Pma::default();
            let mut oracle = BTreeSet::new();
            for batch in ops {
                let mut ins = BTreeSet::new();
                let mut del = BTreeSet::new();
                for (k, insert) in batch {
                    if ins.contains(&k) || del.contains(&k) {
                        continue;
                    }
                    if insert && !oracle.contains(&k) {
                        ins.insert(k);
                    } else if !insert && oracle.contains(&k) {
                        del.insert(k);
                    }
                }
                let ins: Vec<u64> = ins.into_iter().collect();
                let del: Vec<u64> = del.into_iter().collect();
                pma.apply(&ins, &del);
                for k in &ins { oracle.insert(*k); }
                for k in &del { oracle.remove(k); }
                prop_assert!(pma.check_invariants().is_ok(), "{:?}", pma.check_invariants());
                prop_assert_eq!(pma.iter().collect::<Vec<_>>(), oracle.iter().copied().collect::<Vec<_>>());
            }
            for k in 0..400u64 {
                prop_assert_eq!(pma.locate_segment(k), pma.locate_segment_scan(k));
                prop_assert_eq!(pma.contains(k), oracle.contains(&k));
            }
        }
    }
}
