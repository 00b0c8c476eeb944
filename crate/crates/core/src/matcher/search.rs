//! Depth-first extension of one anchored task.
//!
//! Every frame holds the candidate list of one order position together with
//! a packed `(next, end)` cursor, so another worker can claim the upper part
//! of a list while its owner keeps walking the lower part.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Instant;

use super::intersect::gallop;
use super::{BatchInput, CompiledGroup, Constraint, MatchError, ReportedMatch, SearchStats, Task};
use crate::graph::VertexId;

/// A data vertex and the group members for which it is still viable.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Cand {
    pub v: VertexId,
    pub alive: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FrameKind {
    /// Shared position of a coalesced group; `alive` carries the members.
    Shared,
    /// Split point after the shared positions; each item names a member in `v`.
    Members,
    /// Position of one member's private suffix.
    Member(usize),
}

#[inline]
fn pack(next: u32, end: u32) -> u64 {
    (next as u64) << 32 | end as u64
}

#[inline]
fn unpack(x: u64) -> (u32, u32) {
    ((x >> 32) as u32, x as u32)
}

/// Candidate list of one frame with its claim cursor.
#[derive(Debug)]
pub struct FrameData {
    pub items: Vec<Cand>,
    cursor: AtomicU64,
}

impl FrameData {
    pub fn new(items: Vec<Cand>) -> Self {
        let end = items.len() as u32;
        FrameData { items, cursor: AtomicU64::new(pack(0, end)) }
    }

    /// Index of the next unexplored item, claimed for the caller.
    #[inline]
    pub fn claim(&self) -> Option<usize> {
        let mut cur = self.cursor.load(Ordering::Acquire);
        loop {
            let (next, end) = unpack(cur);
            if next >= end {
                return None;
            }
            match self.cursor.compare_exchange_weak(cur, pack(next + 1, end), Ordering::AcqRel, Ordering::Acquire) {
                Ok(_) => return Some(next as usize),
                Err(seen) => cur = seen,
            }
        }
    }

    /// Claims the upper `floor(unexplored / 2)` items, if at least two are unexplored.
    pub fn split(&self) -> Option<std::ops::Range<usize>> {
        let mut cur = self.cursor.load(Ordering::Acquire);
        loop {
            let (next, end) = unpack(cur);
            let unexplored = end.saturating_sub(next);
            if unexplored < 2 {
                return None;
            }
            let cut = end - unexplored / 2;
            match self.cursor.compare_exchange_weak(cur, pack(next, cut), Ordering::AcqRel, Ordering::Acquire) {
                Ok(_) => return Some(cut as usize..end as usize),
                Err(seen) => cur = seen,
            }
        }
    }

    /// `(explored or claimed, total still owned)`.
    pub fn progress(&self) -> (usize, usize) {
        let (next, end) = unpack(self.cursor.load(Ordering::Acquire));
        (next as usize, end as usize)
    }

    pub fn unexplored(&self) -> usize {
        let (next, end) = self.progress();
        end.saturating_sub(next)
    }
}

#[derive(Clone, Debug)]
pub struct Frame {
    pub level: usize,
    pub kind: FrameKind,
    pub data: Arc<FrameData>,
}

/// Candidates taken from another worker's frame, with the assignment above them.
#[derive(Clone, Debug)]
pub struct StolenWork {
    pub task: Task,
    pub level: usize,
    pub kind: FrameKind,
    pub items: Vec<Cand>,
    pub prefix: Vec<VertexId>,
}

/// Observation points used by the scheduler to publish progress.
pub trait SearchHooks {
    fn pushed(&mut self, _frame: &Frame, _prefix: &[VertexId]) {}
    fn popped(&mut self) {}
    fn claimed(&mut self) {}
}

pub struct NoHooks;

impl SearchHooks for NoHooks {}

/// How often the deadline is polled, in candidate generations.
const DEADLINE_POLL: u64 = 256;

pub struct Searcher<'a, 'b> {
    input: &'a BatchInput<'b>,
    task: Task,
    group: &'a CompiledGroup,
    assign: [VertexId; 32],
    frames: Vec<Frame>,
    out: &'a mut Vec<ReportedMatch>,
    pub stats: SearchStats,
    deadline: Option<Instant>,
}

impl<'a, 'b> Searcher<'a, 'b> {
    pub fn new(input: &'a BatchInput<'b>, task: Task, out: &'a mut Vec<ReportedMatch>) -> Self {
        let group = input.group(task);
        Searcher {
            input,
            task,
            group,
            assign: [0; 32],
            frames: Vec::new(),
            out,
            stats: SearchStats::default(),
            deadline: input.config.deadline,
        }
    }

    /// Full search of the task from its anchor.
    pub fn run<H: SearchHooks>(&mut self, hooks: &mut H) -> Result<(), MatchError> {
        let g = self.group;
        let env = self.input.env(self.task.polarity);
        let (a, b) = (self.task.a, self.task.b);
        let row_a = env.table.row(a);
        let row_b = env.table.row(b);
        let alive = (0..g.members.len()).fold(0u64, |acc, m| {
            let ok = row_a >> g.qv[m][0] & 1 == 1 && row_b >> g.qv[m][1] & 1 == 1;
            acc | (ok as u64) << m
        });
        if alive == 0 {
            return Ok(());
        }
        self.assign[0] = a;
        self.assign[1] = b;
        self.descend(1, alive, None, hooks)?;
        self.drain(hooks)
    }

    /// Continues from stolen candidates.
    pub fn resume<H: SearchHooks>(&mut self, work: StolenWork, hooks: &mut H) -> Result<(), MatchError> {
        self.assign[..work.prefix.len()].copy_from_slice(&work.prefix);
        let frame = Frame { level: work.level, kind: work.kind, data: Arc::new(FrameData::new(work.items)) };
        hooks.pushed(&frame, &self.assign[..work.level]);
        self.frames.push(frame);
        self.drain(hooks)
    }

    fn drain<H: SearchHooks>(&mut self, hooks: &mut H) -> Result<(), MatchError> {
        while let Some(top) = self.frames.last() {
            let Some(i) = top.data.claim() else {
                self.frames.pop();
                hooks.popped();
                continue;
            };
            let (level, kind, cand) = (top.level, top.kind, top.data.items[i]);
            hooks.claimed();
            match kind {
                FrameKind::Members => self.expand(level, cand.alive, Some(cand.v as usize), hooks)?,
                FrameKind::Shared => {
                    self.assign[level] = cand.v;
                    self.descend(level, cand.alive, None, hooks)?;
                }
                FrameKind::Member(m) => {
                    self.assign[level] = cand.v;
                    self.descend(level, cand.alive, Some(m), hooks)?;
                }
            }
        }
        Ok(())
    }

    fn push<H: SearchHooks>(&mut self, level: usize, kind: FrameKind, items: Vec<Cand>, hooks: &mut H) {
        let frame = Frame { level, kind, data: Arc::new(FrameData::new(items)) };
        hooks.pushed(&frame, &self.assign[..level]);
        self.frames.push(frame);
    }

    /// Positions `0..=level` are assigned; prepares position `level + 1`.
    fn descend<H: SearchHooks>(&mut self, level: usize, alive: u64, member: Option<usize>, hooks: &mut H) -> Result<(), MatchError> {
        let g = self.group;
        let next = level + 1;
        if next == g.n {
            for m in bits64(alive) {
                self.emit(m);
            }
            return Ok(());
        }
        let member = match member {
            Some(m) => Some(m),
            None if next >= g.shared_len => {
                if alive.count_ones() > 1 {
                    let items = bits64(alive).map(|m| Cand { v: m as VertexId, alive: 1 << m }).collect();
                    self.push(next, FrameKind::Members, items, hooks);
                    return Ok(());
                }
                Some(alive.trailing_zeros() as usize)
            }
            None => None,
        };
        self.expand(next, alive, member, hooks)
    }

    /// Generates candidates for position `level`, which is not yet assigned.
    fn expand<H: SearchHooks>(&mut self, level: usize, alive: u64, member: Option<usize>, hooks: &mut H) -> Result<(), MatchError> {
        let g = self.group;
        if let Some(m) = member {
            if self.input.config.leaf_join && g.join_from[m] == level {
                return self.join(m, level);
            }
        }
        let cons = match member {
            None => &g.shared_back[level],
            Some(m) => &g.members[m].back[level],
        };
        let items = self.gen(level, alive, cons, level)?;
        if level + 1 == g.n {
            for c in items {
                self.assign[level] = c.v;
                for m in bits64(c.alive) {
                    self.emit(m);
                }
            }
        } else if !items.is_empty() {
            let kind = member.map_or(FrameKind::Shared, FrameKind::Member);
            self.push(level, kind, items, hooks);
        }
        Ok(())
    }

    /// Candidates for `level` given `alive` members, with injectivity checked
    /// against the first `used` positions.
    fn gen(&mut self, level: usize, alive: u64, cons: &[Constraint], used: usize) -> Result<Vec<Cand>, MatchError> {
        self.stats.visits += 1;
        if self.stats.visits.is_multiple_of(DEADLINE_POLL) {
            if let Some(d) = self.deadline {
                if Instant::now() >= d {
                    return Err(MatchError::DeadlineExceeded);
                }
            }
        }
        let env = self.input.env(self.task.polarity);
        let graph = env.graph;
        let g = self.group;
        if cons.iter().any(|c| c.label.is_some()) && !graph.has_edge_labels() {
            return Ok(Vec::new());
        }
        let k = cons.len();
        let mut lists: [&[VertexId]; 32] = [&[]; 32];
        let mut base = 0;
        for (j, c) in cons.iter().enumerate() {
            lists[j] = graph.neighbors(self.assign[c.pos]);
            if lists[j].len() < lists[base].len() {
                base = j;
            }
        }
        let mut cursor = [0usize; 32];
        let mut hit = [0usize; 32];
        let mut ops = 0u64;
        let single = alive.count_ones() == 1;
        let qv = &g.qv;
        let filter = &env.filter;
        let anchor = self.task.order;
        let mut out = Vec::new();
        'cands: for (idx, &c) in lists[base].iter().enumerate() {
            ops += 1;
            let row = env.table.row(c);
            let alive = if single {
                let m = alive.trailing_zeros() as usize;
                if row >> qv[m][level] & 1 == 1 {
                    alive
                } else {
                    0
                }
            } else {
                bits64(alive).fold(0u64, |acc, m| acc | ((row >> qv[m][level] & 1) as u64) << m)
            };
            if alive == 0 || self.assign[..used].contains(&c) {
                continue;
            }
            hit[base] = idx;
            for j in (0..k).filter(|&j| j != base) {
                let pos = gallop(lists[j], cursor[j], c, &mut ops);
                cursor[j] = pos;
                if pos == lists[j].len() {
                    break 'cands;
                }
                if lists[j][pos] != c {
                    continue 'cands;
                }
                hit[j] = pos;
            }
            for (j, con) in cons.iter().enumerate() {
                let u = self.assign[con.pos];
                if let Some(l) = con.label {
                    if graph.edge_label_at(u, hit[j]) != Some(l) {
                        continue 'cands;
                    }
                }
                if filter.blocked(u, c, anchor) {
                    continue 'cands;
                }
            }
            out.push(Cand { v: c, alive });
        }
        self.stats.record_intersection(ops, k, lists[..k].iter().map(|l| l.len()).max().unwrap_or(0), self.input.max_column(self.task.polarity));
        Ok(out)
    }

    /// Enumerates a suffix of degree-one query vertices by joining their
    /// candidate lists, each computed on first use.
    fn join(&mut self, m: usize, from: usize) -> Result<(), MatchError> {
        let n = self.group.n;
        let mut lists: Vec<Option<Vec<Cand>>> = vec![None; n - from];
        self.join_level(m, from, from, &mut lists)
    }

    fn join_level(&mut self, m: usize, from: usize, level: usize, lists: &mut [Option<Vec<Cand>>]) -> Result<(), MatchError> {
        let g = self.group;
        if level == g.n {
            self.emit(m);
            return Ok(());
        }
        if lists[level - from].is_none() {
            let cons = &g.members[m].back[level];
            lists[level - from] = Some(self.gen(level, 1 << m, cons, from)?);
        }
        let count = lists[level - from].as_ref().unwrap().len();
        for i in 0..count {
            let v = lists[level - from].as_ref().unwrap()[i].v;
            if self.assign[from..level].contains(&v) {
                continue;
            }
            self.assign[level] = v;
            self.join_level(m, from, level + 1, lists)?;
        }
        Ok(())
    }

    fn emit(&mut self, m: usize) {
        let qv = &self.group.qv[m];
        let mut mapping = vec![0; self.group.n];
        for (i, &u) in qv.iter().enumerate() {
            mapping[u] = self.assign[i];
        }
        self.stats.matches += 1;
        self.out.push(ReportedMatch { mapping, anchor: self.task.order });
    }
}

/// Set-bit positions of a `u64`, ascending.
pub fn bits64(mut mask: u64) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        (mask != 0).then(|| {
            let i = mask.trailing_zeros() as usize;
            mask &= mask - 1;
            i
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_takes_upper_half() {
        let items: Vec<Cand> = (5..=102).map(|v| Cand { v, alive: 1 }).collect();
        let frame = FrameData::new(items);
        let range = frame.split().unwrap();
        assert_eq!(frame.items[range.start].v, 54);
        assert_eq!(frame.items[range.end - 1].v, 102);
        assert_eq!(frame.progress(), (0, 49));
    }

    #[test]
    fn split_floor_and_minimum() {
        let frame = FrameData::new(vec![Cand { v: 0, alive: 1 }; 50]);
        assert_eq!(frame.claim(), Some(0));
        assert_eq!(frame.split().unwrap().len(), 24);
        assert_eq!(frame.unexplored(), 25);
        let tiny = FrameData::new(vec![Cand { v: 0, alive: 1 }]);
        assert!(tiny.split().is_none());
        assert_eq!(tiny.claim(), Some(0));
        assert_eq!(tiny.claim(), None);
    }
}
