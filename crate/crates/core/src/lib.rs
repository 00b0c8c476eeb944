//! Batch-dynamic subgraph matching.
//!
//! A labeled data graph lives in a packed memory array ([`graph`]). Each
//! query is analyzed once ([`query`]) into matching orders and groups of
//! automorphically equivalent edges. For every batch of edge updates the
//! candidate filter ([`encoding`]) is refreshed and the search kernel
//! ([`matcher`]) reports the matches gained and lost, driven by a
//! work-stealing pool ([`scheduler`]).

pub mod graph;
pub mod encoding;
pub mod query;
pub mod oracle;
pub mod matcher;
pub mod scheduler;
pub mod session;
