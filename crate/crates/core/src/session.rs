//! One query maintained over a stream of batches.

use std::sync::Arc;
use std::time::Instant;

use thiserror::Error;

use crate::encoding::{
    build_scheme, encode_all, encode_query, gen_candidate_table, incremental_reencode, refresh_candidate_table,
    CandidateTable, EncodingError, Encodings, QueryEncodings, DEFAULT_GROUP_BITS,
};
use crate::graph::{GraphError, GraphSnapshot, LabeledGraph, UpdateBatch, VertexId};
use crate::matcher::{match_batch, BatchInput, MatchConfig, MatchError};
use crate::query::{PlanConfig, QueryGraph, QueryPlan};
use crate::scheduler::{run_batch, BatchOutcome, SchedulerConfig, SchedulerError, UtilizationReport, WorkerUtilization};

#[derive(Debug, Error)]
pub enum SessionError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Encoding(#[from] EncodingError),
    #[error(transparent)]
    Scheduler(#[from] SchedulerError),
}

impl From<MatchError> for SessionError {
    fn from(e: MatchError) -> Self {
        SessionError::Scheduler(e.into())
    }
}

impl SessionError {
    pub fn is_timeout(&self) -> bool {
        matches!(self, SessionError::Scheduler(SchedulerError::DeadlineExceeded))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Executor {
    /// Every task on the calling thread.
    Sequential,
    Pool(SchedulerConfig),
}

#[derive(Debug, Clone, Copy)]
pub struct SessionConfig {
    pub group_bits: u32,
    pub plan: PlanConfig,
    pub matching: MatchConfig,
    pub executor: Executor,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig {
            group_bits: DEFAULT_GROUP_BITS,
            plan: PlanConfig::default(),
            matching: MatchConfig::default(),
            executor: Executor::Sequential,
        }
    }
}

/// Graph states on both sides of an applied batch.
#[derive(Debug, Clone)]
pub struct PreparedBatch {
    pub batch: UpdateBatch,
    pub before: Arc<GraphSnapshot>,
    pub table_before: Arc<CandidateTable>,
    pub after: Arc<GraphSnapshot>,
    pub table_after: Arc<CandidateTable>,
    /// Plan with orders chosen for the post-batch table.
    pub plan: Arc<QueryPlan>,
    /// Vertices whose code changed, ascending.
    pub dirty: Vec<VertexId>,
}

#[derive(Debug)]
pub struct MatchSession {
    graph: LabeledGraph,
    snapshot: Arc<GraphSnapshot>,
    query: QueryEncodings,
    encodings: Encodings,
    table: Arc<CandidateTable>,
    plan: Arc<QueryPlan>,
    config: SessionConfig,
}

impl MatchSession {
    pub fn new(graph: LabeledGraph, q: &QueryGraph, config: SessionConfig) -> Result<Self, SessionError> {
        let max_label = graph.max_label().unwrap_or(0).max(q.labels().iter().copied().max().unwrap_or(0));
        let scheme = build_scheme(q, max_label, config.group_bits)?;
        let snapshot = Arc::new(graph.snapshot());
        let encodings = encode_all(snapshot.as_ref(), &scheme)?;
        let query = encode_query(q, &scheme)?;
        let table = gen_candidate_table(&encodings, &query)?;
        let plan = QueryPlan::build(q, &table.column_sizes(), config.plan);
        Ok(MatchSession { graph, snapshot, query, encodings, table: Arc::new(table), plan: Arc::new(plan), config })
    }

    pub fn graph(&self) -> &LabeledGraph {
        &self.graph
    }

    pub fn snapshot(&self) -> &GraphSnapshot {
        &self.snapshot
    }

    pub fn encodings(&self) -> &Encodings {
        &self.encodings
    }

    pub fn table(&self) -> &CandidateTable {
        &self.table
    }

    pub fn plan(&self) -> &QueryPlan {
        &self.plan
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    pub fn config_mut(&mut self) -> &mut SessionConfig {
        &mut self.config
    }

    /// Applies `batch` to the graph and refreshes codes, table and orders.
    /// On error the session is unchanged.
    pub fn prepare(&mut self, batch: UpdateBatch) -> Result<PreparedBatch, SessionError> {
        self.graph.apply_batch(&batch)?;
        let before = Arc::clone(&self.snapshot);
        let table_before = Arc::clone(&self.table);
        let after = Arc::new(before.after_batch(&self.graph, &batch));
        let dirty = incremental_reencode(after.as_ref(), &batch, &mut self.encodings)?;
        let mut table = CandidateTable::clone(&table_before);
        refresh_candidate_table(&mut table, &self.encodings, &dirty, &self.query);
        let counts = table.column_sizes();
        if self.plan.needs_refresh(&counts) {
            Arc::make_mut(&mut self.plan).refresh_orders(&counts);
        }
        self.table = Arc::new(table);
        self.snapshot = Arc::clone(&after);
        Ok(PreparedBatch {
            batch,
            before,
            table_before,
            after,
            table_after: Arc::clone(&self.table),
            plan: Arc::clone(&self.plan),
            dirty,
        })
    }

    /// Matches gained and lost by a prepared batch.
    pub fn search(&self, prepared: &PreparedBatch, deadline: Option<Instant>) -> Result<BatchOutcome, SessionError> {
        search_prepared(prepared, MatchConfig { deadline, ..self.config.matching }, self.config.executor)
    }

    pub fn process(&mut self, batch: UpdateBatch) -> Result<BatchOutcome, SessionError> {
        let prepared = self.prepare(batch)?;
        let deadline = self.config.matching.deadline;
        self.search(&prepared, deadline)
    }
}

/// Runs the match stage of a prepared batch; needs no access to the session.
pub fn search_prepared(prepared: &PreparedBatch, config: MatchConfig, executor: Executor) -> Result<BatchOutcome, SessionError> {
    let input = BatchInput::new(
        &prepared.plan,
        &prepared.batch,
        &prepared.before,
        &prepared.table_before,
        &prepared.after,
        &prepared.table_after,
        config,
    );
    match executor {
        Executor::Sequential => {
            let t0 = Instant::now();
            let (matches, stats) = match_batch(&input)?;
            let elapsed = t0.elapsed();
            let utilization = UtilizationReport { workers: vec![WorkerUtilization { busy: elapsed, total: elapsed }] };
            Ok(BatchOutcome { matches, stats, utilization, steals: 0 })
        }
        Executor::Pool(pool) => Ok(run_batch(&input, &pool)?),
    }
}
