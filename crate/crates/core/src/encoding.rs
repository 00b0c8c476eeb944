//! Neighborhood-label-frequency encodings and the candidate table.
//!
//! A code holds the vertex label in its first `N` bits followed by one
//! saturating `M`-bit counter per query label. In memory every counter sits
//! in an `M + 1` bit lane whose top bit is a guard, so all groups of two codes
//! can be compared with a single subtraction.

use std::collections::HashSet;

use serde::Serialize;
use thiserror::Error;

use crate::graph::{GraphView, Label, UpdateBatch, VertexId};
use crate::query::{QueryGraph, QueryVertex};

pub const DEFAULT_GROUP_BITS: u32 = 2;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EncodingError {
    #[error("vertex {vertex} has label {label}, which does not fit in {bits} label bits")]
    LabelOutOfRange { vertex: VertexId, label: Label, bits: u32 },
    #[error("{labels} query labels with {group_bits}-bit groups do not fit in a 128-bit code")]
    TooWide { labels: usize, group_bits: u32 },
    #[error("group width must be between 1 and 8 bits, got {0}")]
    GroupBits(u32),
    #[error("encodings were built under different schemes")]
    SchemeMismatch,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EncodingScheme {
    pub label_bits: u32,
    pub group_bits: u32,
    /// Ascending; group `i` counts neighbors labeled `query_labels[i]`.
    pub query_labels: Vec<Label>,
}

impl EncodingScheme {
    pub fn new(label_bits: u32, group_bits: u32, mut query_labels: Vec<Label>) -> Result<Self, EncodingError> {
        if !(1..=8).contains(&group_bits) {
            return Err(EncodingError::GroupBits(group_bits));
        }
        query_labels.sort_unstable();
        query_labels.dedup();
        if query_labels.len() * (group_bits as usize + 1) > 128 {
            return Err(EncodingError::TooWide { labels: query_labels.len(), group_bits });
        }
        Ok(EncodingScheme { label_bits: label_bits.clamp(1, 32), group_bits, query_labels })
    }

    /// K = N + M·|query labels|.
    pub fn total_bits(&self) -> u32 {
        self.label_bits + self.group_bits * self.query_labels.len() as u32
    }

    pub fn cap(&self) -> u32 {
        (1 << self.group_bits) - 1
    }

    fn lane(&self) -> u32 {
        self.group_bits + 1
    }

    fn guard_mask(&self) -> u128 {
        (0..self.query_labels.len()).fold(0u128, |m, i| m | 1u128 << (i as u32 * self.lane() + self.group_bits))
    }

    pub fn group_of(&self, label: Label) -> Option<usize> {
        self.query_labels.binary_search(&label).ok()
    }

    fn fits(&self, label: Label) -> bool {
        self.label_bits >= 32 || label < (1 << self.label_bits)
    }
}

/// Scheme for `q` when labels range up to `max_label`:
/// `N = ceil(log2(max_label + 1))`, at least one bit.
pub fn build_scheme(q: &QueryGraph, max_label: Label, group_bits: u32) -> Result<EncodingScheme, EncodingError> {
    let label_bits = (32 - max_label.leading_zeros()).max(1);
    EncodingScheme::new(label_bits, group_bits, q.distinct_labels())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct VertexEncoding {
    pub label: Label,
    lanes: u128,
}

impl VertexEncoding {
    fn from_counts(scheme: &EncodingScheme, label: Label, counts: &[u32]) -> Self {
        let lanes = counts.iter().enumerate().fold(0u128, |acc, (i, &c)| {
            acc | (c.min(scheme.cap()) as u128) << (i as u32 * scheme.lane())
        });
        VertexEncoding { label, lanes }
    }

    pub fn group(&self, scheme: &EncodingScheme, i: usize) -> u32 {
        (self.lanes >> (i as u32 * scheme.lane()) & scheme.cap() as u128) as u32
    }

    /// Compact K-bit code: label in the high bits, then group 0, group 1, ...
    pub fn code(&self, scheme: &EncodingScheme) -> u128 {
        let mut out = self.label as u128;
        for i in 0..scheme.query_labels.len() {
            out = out << scheme.group_bits | self.group(scheme, i) as u128;
        }
        out
    }

    pub fn to_bit_string(&self, scheme: &EncodingScheme) -> String {
        format!("{:0width$b}", self.code(scheme), width = scheme.total_bits() as usize)
    }

    /// Label equality and per-group `self ≥ query`, the candidate predicate.
    #[inline]
    pub fn contains(&self, query: &VertexEncoding, guard: u128) -> bool {
        self.label == query.label && ((self.lanes | guard) - query.lanes) & guard == guard
    }
}

fn encode_vertex<G: GraphView + ?Sized>(g: &G, scheme: &EncodingScheme, v: VertexId) -> Result<Option<VertexEncoding>, EncodingError> {
    let Some(label) = g.vertex_label(v) else {
        return Ok(None);
    };
    if !scheme.fits(label) {
        return Err(EncodingError::LabelOutOfRange { vertex: v, label, bits: scheme.label_bits });
    }
    let mut counts = vec![0u32; scheme.query_labels.len()];
    for &w in g.adjacent(v).iter() {
        if let Some(i) = g.vertex_label(w).and_then(|l| scheme.group_of(l)) {
            counts[i] += 1;
        }
    }
    Ok(Some(VertexEncoding::from_counts(scheme, label, &counts)))
}

/// Codes of all data vertices under one scheme.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Encodings {
    scheme: EncodingScheme,
    codes: Vec<Option<VertexEncoding>>,
}

impl Encodings {
    pub fn scheme(&self) -> &EncodingScheme {
        &self.scheme
    }

    pub fn get(&self, v: VertexId) -> Option<&VertexEncoding> {
        self.codes.get(v as usize).and_then(Option::as_ref)
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }
}

pub fn encode_all<G: GraphView + ?Sized>(g: &G, scheme: &EncodingScheme) -> Result<Encodings, EncodingError> {
    let codes = (0..g.id_bound() as VertexId)
        .map(|v| encode_vertex(g, scheme, v))
        .collect::<Result<_, _>>()?;
    Ok(Encodings { scheme: scheme.clone(), codes })
}

/// Recomputes the codes of batch endpoints (and of vertices new since the
/// last call) against the post-batch graph. Returns, ascending, the vertices
/// whose code actually changed.
pub fn incremental_reencode<G: GraphView + ?Sized>(
    g_after: &G,
    batch: &UpdateBatch,
    encodings: &mut Encodings,
) -> Result<Vec<VertexId>, EncodingError> {
    let old_len = encodings.codes.len();
    let bound = g_after.id_bound().max(old_len);
    encodings.codes.resize(bound, None);
    let mut touched: HashSet<VertexId> = batch.iter().flat_map(|u| [u.u, u.v]).collect();
    touched.extend(old_len as VertexId..bound as VertexId);
    let mut dirty = Vec::new();
    for v in touched {
        let fresh = encode_vertex(g_after, &encodings.scheme, v)?;
        let slot = &mut encodings.codes[v as usize];
        if *slot != fresh {
            *slot = fresh;
            dirty.push(v);
        }
    }
    dirty.sort_unstable();
    Ok(dirty)
}

/// Query-side codes: neighbor counts capped at the group maximum, so the
/// containment test stays sound when data counters saturate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryEncodings {
    scheme: EncodingScheme,
    codes: Vec<VertexEncoding>,
}

impl QueryEncodings {
    pub fn scheme(&self) -> &EncodingScheme {
        &self.scheme
    }

    pub fn get(&self, u: QueryVertex) -> &VertexEncoding {
        &self.codes[u]
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }
}

pub fn encode_query(q: &QueryGraph, scheme: &EncodingScheme) -> Result<QueryEncodings, EncodingError> {
    let codes = (0..q.len())
        .map(|u| {
            let label = q.label(u);
            if !scheme.fits(label) {
                return Err(EncodingError::LabelOutOfRange { vertex: u as VertexId, label, bits: scheme.label_bits });
            }
            let mut counts = vec![0u32; scheme.query_labels.len()];
            for w in q.neighbors(u) {
                if let Some(i) = scheme.group_of(q.label(w)) {
                    counts[i] += 1;
                }
            }
            Ok(VertexEncoding::from_counts(scheme, label, &counts))
        })
        .collect::<Result<_, _>>()?;
    Ok(QueryEncodings { scheme: scheme.clone(), codes })
}

/// Row per data vertex (bit `u` set when the vertex may match query vertex
/// `u`) with a sorted column view per query vertex.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CandidateTable {
    rows: Vec<u32>,
    columns: Vec<Vec<VertexId>>,
}

impl CandidateTable {
    #[inline]
    pub fn row(&self, v: VertexId) -> u32 {
        self.rows.get(v as usize).copied().unwrap_or(0)
    }

    #[inline]
    pub fn contains(&self, v: VertexId, u: QueryVertex) -> bool {
        self.row(v) >> u & 1 == 1
    }

    pub fn column(&self, u: QueryVertex) -> &[VertexId] {
        &self.columns[u]
    }

    pub fn query_size(&self) -> usize {
        self.columns.len()
    }

    pub fn column_sizes(&self) -> Vec<usize> {
        self.columns.iter().map(Vec::len).collect()
    }
}

fn row_for(code: Option<&VertexEncoding>, query: &QueryEncodings, guard: u128) -> u32 {
    let Some(code) = code else { return 0 };
    query
        .codes
        .iter()
        .enumerate()
        .filter(|(_, qc)| code.contains(qc, guard))
        .fold(0u32, |m, (u, _)| m | 1 << u)
}

pub fn gen_candidate_table(encodings: &Encodings, query: &QueryEncodings) -> Result<CandidateTable, EncodingError> {
    if encodings.scheme != query.scheme {
        return Err(EncodingError::SchemeMismatch);
    }
    let guard = query.scheme.guard_mask();
    let rows: Vec<u32> = encodings.codes.iter().map(|c| row_for(c.as_ref(), query, guard)).collect();
    let mut columns = vec![Vec::new(); query.len()];
    for (v, &row) in rows.iter().enumerate() {
        for (u, col) in columns.iter_mut().enumerate() {
            if row >> u & 1 == 1 {
                col.push(v as VertexId);
            }
        }
    }
    Ok(CandidateTable { rows, columns })
}

/// Brings `table` in line with `encodings` after the codes of `dirty` changed.
pub fn refresh_candidate_table(
    table: &mut CandidateTable,
    encodings: &Encodings,
    dirty: &[VertexId],
    query: &QueryEncodings,
) {
    debug_assert_eq!(encodings.scheme, query.scheme);
    let guard = query.scheme.guard_mask();
    if table.rows.len() < encodings.codes.len() {
        table.rows.resize(encodings.codes.len(), 0);
    }
    let mut added = vec![Vec::new(); query.len()];
    let mut removed = vec![Vec::new(); query.len()];
    let mut dirty = dirty.to_vec();
    dirty.sort_unstable();
    dirty.dedup();
    for &v in &dirty {
        let new = row_for(encodings.get(v), query, guard);
        let old = std::mem::replace(&mut table.rows[v as usize], new);
        for u in 0..query.len() {
            match (old >> u & 1, new >> u & 1) {
                (0, 1) => added[u].push(v),
                (1, 0) => removed[u].push(v),
                _ => {}
            }
        }
    }
    for u in 0..query.len() {
        if added[u].is_empty() && removed[u].is_empty() {
            continue;
        }
        let col = std::mem::take(&mut table.columns[u]);
        let mut out = Vec::with_capacity(col.len() + added[u].len());
        let mut add = added[u].iter().copied().peekable();
        let mut del = removed[u].iter().copied().peekable();
        for v in col {
            while let Some(a) = add.next_if(|&a| a < v) {
                out.push(a);
            }
            if del.next_if_eq(&v).is_some() {
                continue;
            }
            out.push(v);
        }
        out.extend(add);
        table.columns[u] = out;
    }
}
