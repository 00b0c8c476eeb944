//! Per-query runs over an update stream with overlapped stages.
//!
//! Preprocessing of batch `i + 1` (graph update, re-encoding, table refresh)
//! runs while batch `i` is matched and batch `i - 1` is post-processed.

use std::sync::mpsc::sync_channel;
use std::thread;
use std::time::{Duration, Instant};

use bdsm_core::graph::UpdateBatch;
use bdsm_core::matcher::MatchConfig;
use bdsm_core::query::QueryGraph;
use bdsm_core::scheduler::{BatchOutcome, UtilizationReport};
use bdsm_core::session::{search_prepared, MatchSession, PreparedBatch, SessionConfig, SessionError};
use thiserror::Error;

use crate::generate::QueryCategory;
use crate::io::GraphRecords;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("data graph: {0}")]
    Graph(#[from] bdsm_core::graph::GraphError),
    #[error("query {query}: {source}")]
    Session { query: usize, source: SessionError },
}

#[derive(Debug, Clone, Copy)]
pub struct PipelineConfig {
    pub session: SessionConfig,
    /// Per-query budget; exceeding it marks the query unsolved.
    pub timeout: Option<Duration>,
    /// Overlap the stages; otherwise run them one after another.
    pub pipelined: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig { session: SessionConfig::default(), timeout: Some(Duration::from_secs(30 * 60)), pipelined: true }
    }
}

#[derive(Debug, Clone)]
pub struct QueryInput {
    pub id: usize,
    pub category: Option<QueryCategory>,
    pub query: QueryGraph,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchReport {
    pub batch: usize,
    pub positive: usize,
    pub negative: usize,
    pub preprocess: Duration,
    pub matching: Duration,
    pub visits: u64,
}

impl BatchReport {
    /// Share of the batch spent updating the graph and its filter.
    pub fn ratio(&self) -> f64 {
        let total = self.preprocess + self.matching;
        if total.is_zero() {
            0.0
        } else {
            self.preprocess.as_secs_f64() / total.as_secs_f64()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryReport {
    pub id: usize,
    pub category: Option<QueryCategory>,
    pub size: usize,
    pub seconds: f64,
    pub solved: bool,
    /// Batches completed before a timeout, if any.
    pub batches: Vec<BatchReport>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunReport {
    pub queries: Vec<QueryReport>,
    pub utilization: UtilizationReport,
}

impl RunReport {
    /// Mean latency over solved queries.
    pub fn mean_latency(&self) -> Option<f64> {
        let solved: Vec<f64> = self.queries.iter().filter(|q| q.solved).map(|q| q.seconds).collect();
        (!solved.is_empty()).then(|| solved.iter().sum::<f64>() / solved.len() as f64)
    }
}

struct Matched {
    index: usize,
    outcome: Result<BatchOutcome, SessionError>,
    preprocess: Duration,
    matching: Duration,
}

pub fn run_pipeline(
    graph: &GraphRecords,
    queries: &[QueryInput],
    stream: &[UpdateBatch],
    config: &PipelineConfig,
) -> Result<RunReport, PipelineError> {
    let base = graph.build()?;
    let mut report = RunReport::default();
    for q in queries {
        let session = MatchSession::new(base.clone(), &q.query, config.session)
            .map_err(|source| PipelineError::Session { query: q.id, source })?;
        // Latency covers the stream only; loading and the initial index are offline.
        let start = Instant::now();
        let deadline = config.timeout.map(|t| start + t);
        let mut qr = QueryReport { id: q.id, category: q.category, size: q.query.len(), seconds: 0.0, solved: true, batches: Vec::new() };
        let matching = MatchConfig { deadline, ..config.session.matching };
        let mut sink = |m: Matched, util: &mut UtilizationReport| -> Result<bool, PipelineError> {
            match m.outcome {
                Ok(out) => {
                    if log::log_enabled!(log::Level::Debug) {
                        for line in out.matches.lines() {
                            log::debug!("query {} batch {}: {line}", q.id, m.index);
                        }
                    }
                    util.merge(&out.utilization);
                    qr.batches.push(BatchReport {
                        batch: m.index,
                        positive: out.matches.positive.len(),
                        negative: out.matches.negative.len(),
                        preprocess: m.preprocess,
                        matching: m.matching,
                        visits: out.stats.visits,
                    });
                    Ok(deadline.is_none_or(|d| Instant::now() < d))
                }
                Err(e) if e.is_timeout() => Ok(false),
                Err(source) => Err(PipelineError::Session { query: q.id, source }),
            }
        };
        let completed = if config.pipelined {
            run_overlapped(session, stream, matching, config, &mut sink, &mut report.utilization)?
        } else {
            run_sequential(session, stream, matching, config, &mut sink, &mut report.utilization)?
        };
        qr.solved = completed;
        qr.seconds = start.elapsed().as_secs_f64();
        if !qr.solved {
            log::info!("query {} unsolved after {:.3}s", q.id, qr.seconds);
        }
        report.queries.push(qr);
    }
    Ok(report)
}

type Sink<'s> = dyn FnMut(Matched, &mut UtilizationReport) -> Result<bool, PipelineError> + 's;

fn prepare(session: &mut MatchSession, batch: &UpdateBatch) -> (Result<PreparedBatch, SessionError>, Duration) {
    let t0 = Instant::now();
    let r = session.prepare(batch.clone());
    (r, t0.elapsed())
}

fn search(prepared: &PreparedBatch, matching: MatchConfig, config: &PipelineConfig) -> (Result<BatchOutcome, SessionError>, Duration) {
    let t0 = Instant::now();
    let r = search_prepared(prepared, matching, config.session.executor);
    (r, t0.elapsed())
}

fn run_sequential(
    mut session: MatchSession,
    stream: &[UpdateBatch],
    matching: MatchConfig,
    config: &PipelineConfig,
    sink: &mut Sink<'_>,
    util: &mut UtilizationReport,
) -> Result<bool, PipelineError> {
    for (index, batch) in stream.iter().enumerate() {
        let (prepared, preprocess) = prepare(&mut session, batch);
        let (outcome, matching_time) = match prepared {
            Ok(p) => search(&p, matching, config),
            Err(e) => (Err(e), Duration::ZERO),
        };
        if !sink(Matched { index, outcome, preprocess, matching: matching_time }, util)? {
            return Ok(false);
        }
    }
    Ok(true)
}

fn run_overlapped(
    mut session: MatchSession,
    stream: &[UpdateBatch],
    matching: MatchConfig,
    config: &PipelineConfig,
    sink: &mut Sink<'_>,
    util: &mut UtilizationReport,
) -> Result<bool, PipelineError> {
    let (prep_tx, prep_rx) = sync_channel::<(usize, Result<PreparedBatch, SessionError>, Duration)>(1);
    let (match_tx, match_rx) = sync_channel::<Matched>(1);
    thread::scope(|scope| {
        scope.spawn(move || {
            for (index, batch) in stream.iter().enumerate() {
                let (r, t) = prepare(&mut session, batch);
                let failed = r.is_err();
                if prep_tx.send((index, r, t)).is_err() || failed {
                    break;
                }
            }
        });
        scope.spawn(move || {
            for (index, prepared, preprocess) in prep_rx {
                let (outcome, matching_time) = match prepared {
                    Ok(p) => search(&p, matching, config),
                    Err(e) => (Err(e), Duration::ZERO),
                };
                if match_tx.send(Matched { index, outcome, preprocess, matching: matching_time }).is_err() {
                    break;
                }
            }
        });
        // Dropping the receiver on an early return stops both stages.
        for m in match_rx {
            if !sink(m, util)? {
                return Ok(false);
            }
        }
        Ok(true)
    })
}
