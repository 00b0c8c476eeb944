//! Offline query analysis: matching orders, automorphisms, equivalent edge
//! sets and the search plan built from them.

pub mod automorphism;
pub mod degenerate;
mod graph;
pub mod order;
pub mod plan;

pub use automorphism::{enumerate_automorphisms, find_automorphism, Perm};
pub use degenerate::{
    find_k_degenerated_subgraphs, resolve_overlaps, select_prioritized_edge, DegeneratedAutomorphicSubgraph,
};
pub use graph::{bits, QueryEdge, QueryError, QueryGraph, QueryVertex, MAX_QUERY_VERTICES};
pub use order::{generate_matching_order, MatchingOrder};
pub use plan::{PlanConfig, PlanMember, QueryPlan, TaskGroup};
