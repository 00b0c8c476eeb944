//! Work-stealing execution of the tasks of one batch.
//!
//! Tasks are taken from a shared queue in chunks of `group_size`. Each
//! worker publishes its open frames on a board. With active stealing an
//! idle worker splits the shallowest open frame of the most loaded board;
//! with passive stealing a busy worker hands half of its shallowest frame to
//! an idle worker every [`SchedulerConfig::split_interval`] claims.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread::{self, Thread};
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::graph::{UpdateOp, VertexId};
use crate::matcher::{
    BatchInput, Frame, IncrementalMatchSet, MatchError, ReportedMatch, SearchHooks, SearchStats, Searcher, StolenWork,
    Task,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StealMode {
    Off,
    Passive,
    Active,
}

impl std::str::FromStr for StealMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "off" => Ok(StealMode::Off),
            "passive" => Ok(StealMode::Passive),
            "active" => Ok(StealMode::Active),
            other => Err(format!("unknown stealing mode `{other}` (expected off, passive or active)")),
        }
    }
}

impl std::fmt::Display for StealMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            StealMode::Off => "off",
            StealMode::Passive => "passive",
            StealMode::Active => "active",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SchedulerConfig {
    pub workers: usize,
    /// Tasks handed out per queue claim.
    pub group_size: usize,
    pub stealing: StealMode,
    /// Claims between checks for idle workers in passive mode.
    pub split_interval: usize,
}

impl Default for SchedulerConfig {
    fn default() -> Self {
        SchedulerConfig { workers: 1, group_size: 1, stealing: StealMode::Active, split_interval: 64 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SchedulerError {
    #[error("search deadline exceeded")]
    DeadlineExceeded,
    #[error("worker {0} panicked")]
    WorkerPanicked(usize),
    #[error("invalid scheduler configuration: {0}")]
    InvalidConfig(&'static str),
}

impl From<MatchError> for SchedulerError {
    fn from(e: MatchError) -> Self {
        match e {
            MatchError::DeadlineExceeded => SchedulerError::DeadlineExceeded,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct WorkerUtilization {
    pub busy: Duration,
    pub total: Duration,
}

impl WorkerUtilization {
    pub fn fraction(&self) -> f64 {
        if self.total.is_zero() {
            0.0
        } else {
            self.busy.as_secs_f64() / self.total.as_secs_f64()
        }
    }
}

/// Busy and elapsed time per worker, accumulated over batches.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct UtilizationReport {
    pub workers: Vec<WorkerUtilization>,
}

impl UtilizationReport {
    pub fn merge(&mut self, other: &UtilizationReport) {
        if self.workers.len() < other.workers.len() {
            self.workers.resize(other.workers.len(), WorkerUtilization::default());
        }
        for (a, b) in self.workers.iter_mut().zip(&other.workers) {
            a.busy += b.busy;
            a.total += b.total;
        }
    }

    /// Total busy time over total elapsed time.
    pub fn aggregate_fraction(&self) -> f64 {
        let busy: f64 = self.workers.iter().map(|w| w.busy.as_secs_f64()).sum();
        let total: f64 = self.workers.iter().map(|w| w.total.as_secs_f64()).sum();
        if total == 0.0 {
            0.0
        } else {
            busy / total
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("worker,busy_seconds,total_seconds,fraction\n");
        for (i, w) in self.workers.iter().enumerate() {
            s.push_str(&format!("{i},{:.6},{:.6},{:.4}\n", w.busy.as_secs_f64(), w.total.as_secs_f64(), w.fraction()));
        }
        s
    }
}

#[derive(Debug, Clone, Default)]
pub struct BatchOutcome {
    pub matches: IncrementalMatchSet,
    pub stats: SearchStats,
    pub utilization: UtilizationReport,
    /// Successful steals and hand-offs.
    pub steals: usize,
}

#[derive(Default)]
struct Board {
    task: Option<Task>,
    frames: Vec<(Frame, Vec<VertexId>)>,
}

impl Board {
    /// Larger when more unexplored work sits near the root.
    fn load(&self) -> f64 {
        self.frames.iter().map(|(f, _)| f.data.unexplored() as f64 * 2f64.powi(-(f.level as i32))).sum()
    }

    /// Upper half of the shallowest frame with at least two unexplored items.
    fn split(&self) -> Option<StolenWork> {
        let task = self.task?;
        self.frames.iter().find_map(|(f, prefix)| {
            let range = f.data.split()?;
            Some(StolenWork {
                task,
                level: f.level,
                kind: f.kind,
                items: f.data.items[range].to_vec(),
                prefix: prefix.clone(),
            })
        })
    }
}

struct Shared<'a> {
    chunks: Vec<&'a [Task]>,
    next_chunk: AtomicUsize,
    boards: Vec<Mutex<Board>>,
    mailboxes: Vec<Mutex<Option<StolenWork>>>,
    idle: Vec<AtomicBool>,
    /// Workers holding or acquiring work.
    busy: AtomicUsize,
    abort: AtomicBool,
    steals: AtomicUsize,
    threads: Mutex<Vec<Option<Thread>>>,
    config: SchedulerConfig,
}

impl Shared<'_> {
    fn next_chunk(&self) -> Option<&[Task]> {
        let i = self.next_chunk.fetch_add(1, Ordering::AcqRel);
        self.chunks.get(i).copied()
    }

    fn queue_empty(&self) -> bool {
        self.next_chunk.load(Ordering::Acquire) >= self.chunks.len()
    }

    fn unpark(&self, w: usize) {
        if let Some(Some(t)) = self.threads.lock().unwrap().get(w) {
            t.unpark();
        }
    }
}

struct WorkerHooks<'s, 'a> {
    me: usize,
    shared: &'s Shared<'a>,
    claims: usize,
}

impl SearchHooks for WorkerHooks<'_, '_> {
    fn pushed(&mut self, frame: &Frame, prefix: &[VertexId]) {
        self.shared.boards[self.me].lock().unwrap().frames.push((frame.clone(), prefix.to_vec()));
    }

    fn popped(&mut self) {
        self.shared.boards[self.me].lock().unwrap().frames.pop();
    }

    fn claimed(&mut self) {
        let s = self.shared;
        self.claims += 1;
        if s.config.stealing != StealMode::Passive || !self.claims.is_multiple_of(s.config.split_interval.max(1)) {
            return;
        }
        for w in (0..s.idle.len()).filter(|&w| w != self.me) {
            if s.idle[w].compare_exchange(true, false, Ordering::AcqRel, Ordering::Acquire).is_err() {
                continue;
            }
            let Some(work) = s.boards[self.me].lock().unwrap().split() else {
                s.idle[w].store(true, Ordering::Release);
                return;
            };
            s.busy.fetch_add(1, Ordering::AcqRel);
            *s.mailboxes[w].lock().unwrap() = Some(work);
            s.steals.fetch_add(1, Ordering::Relaxed);
            s.unpark(w);
            return;
        }
    }
}

struct WorkerResult {
    positive: Vec<ReportedMatch>,
    negative: Vec<ReportedMatch>,
    stats: SearchStats,
    busy: Duration,
}

/// Runs all tasks of `input` on `config.workers` threads.
pub fn run_batch(input: &BatchInput<'_>, config: &SchedulerConfig) -> Result<BatchOutcome, SchedulerError> {
    if config.workers == 0 {
        return Err(SchedulerError::InvalidConfig("workers must be at least 1"));
    }
    if config.group_size == 0 {
        return Err(SchedulerError::InvalidConfig("group size must be at least 1"));
    }
    let tasks = input.tasks();
    let n = config.workers;
    let shared = Shared {
        chunks: tasks.chunks(config.group_size).collect(),
        next_chunk: AtomicUsize::new(0),
        boards: (0..n).map(|_| Mutex::default()).collect(),
        mailboxes: (0..n).map(|_| Mutex::new(None)).collect(),
        idle: (0..n).map(|_| AtomicBool::new(false)).collect(),
        busy: AtomicUsize::new(n),
        abort: AtomicBool::new(false),
        steals: AtomicUsize::new(0),
        threads: Mutex::new(vec![None; n]),
        config: *config,
    };
    let start = Instant::now();
    let results: Vec<(Result<WorkerResult, SchedulerError>, Duration)> = thread::scope(|scope| {
        let handles: Vec<_> = (0..n)
            .map(|w| {
                let shared = &shared;
                scope.spawn(move || {
                    shared.threads.lock().unwrap()[w] = Some(thread::current());
                    let r = match catch_unwind(AssertUnwindSafe(|| worker(w, input, shared))) {
                        Ok(r) => r,
                        Err(_) => Err(SchedulerError::WorkerPanicked(w)),
                    };
                    if r.is_err() {
                        shared.abort.store(true, Ordering::Release);
                    }
                    (r, start.elapsed())
                })
            })
            .collect();
        handles.into_iter().enumerate().map(|(w, h)| h.join().unwrap_or((Err(SchedulerError::WorkerPanicked(w)), start.elapsed()))).collect()
    });
    let wall = start.elapsed();
    let mut positive = Vec::new();
    let mut negative = Vec::new();
    let mut stats = SearchStats::default();
    let mut utilization = UtilizationReport::default();
    let mut first_error = None;
    for (r, _) in results {
        match r {
            Ok(r) => {
                positive.extend(r.positive);
                negative.extend(r.negative);
                stats.merge(&r.stats);
                utilization.workers.push(WorkerUtilization { busy: r.busy, total: wall });
            }
            Err(e) => {
                // A panic outranks the deadline errors it may have caused.
                if first_error.is_none() || matches!(e, SchedulerError::WorkerPanicked(_)) {
                    first_error = Some(e);
                }
                utilization.workers.push(WorkerUtilization { busy: Duration::ZERO, total: wall });
            }
        }
    }
    if let Some(e) = first_error {
        return Err(e);
    }
    Ok(BatchOutcome {
        matches: IncrementalMatchSet::new(positive, negative),
        stats,
        utilization,
        steals: shared.steals.load(Ordering::Relaxed),
    })
}

fn worker(me: usize, input: &BatchInput<'_>, shared: &Shared<'_>) -> Result<WorkerResult, SchedulerError> {
    let mut res = WorkerResult { positive: Vec::new(), negative: Vec::new(), stats: SearchStats::default(), busy: Duration::ZERO };
    let mut hooks = WorkerHooks { me, shared, claims: 0 };
    let run = |res: &mut WorkerResult, task: Task, stolen: Option<StolenWork>, hooks: &mut WorkerHooks| -> Result<(), SchedulerError> {
        if shared.abort.load(Ordering::Acquire) {
            return Err(SchedulerError::DeadlineExceeded);
        }
        let t0 = Instant::now();
        shared.boards[me].lock().unwrap().task = Some(task);
        let out = match task.polarity {
            UpdateOp::Insert => &mut res.positive,
            UpdateOp::Delete => &mut res.negative,
        };
        let mut s = Searcher::new(input, task, out);
        let r = match stolen {
            Some(work) => s.resume(work, hooks),
            None => s.run(hooks),
        };
        res.stats.merge(&s.stats);
        {
            let mut b = shared.boards[me].lock().unwrap();
            b.task = None;
            b.frames.clear();
        }
        res.busy += t0.elapsed();
        r.map_err(SchedulerError::from)
    };
    // Drains the queue, then any work handed to this worker.
    let work_loop = |res: &mut WorkerResult, hooks: &mut WorkerHooks| -> Result<(), SchedulerError> {
        loop {
            if let Some(work) = shared.mailboxes[me].lock().unwrap().take() {
                run(res, work.task, Some(work), hooks)?;
                continue;
            }
            let Some(chunk) = shared.next_chunk() else { return Ok(()) };
            for &task in chunk {
                run(res, task, None, hooks)?;
            }
        }
    };
    work_loop(&mut res, &mut hooks)?;
    shared.busy.fetch_sub(1, Ordering::AcqRel);
    if shared.config.stealing == StealMode::Off {
        return Ok(res);
    }
    shared.idle[me].store(true, Ordering::Release);
    let mut backoff = 0u32;
    loop {
        if shared.abort.load(Ordering::Acquire) {
            return Err(SchedulerError::DeadlineExceeded);
        }
        let got = match shared.config.stealing {
            StealMode::Active => {
                shared.busy.fetch_add(1, Ordering::AcqRel);
                let w = steal(me, shared);
                if w.is_none() {
                    shared.busy.fetch_sub(1, Ordering::AcqRel);
                }
                w
            }
            _ => shared.mailboxes[me].lock().unwrap().take(),
        };
        match got {
            Some(work) => {
                backoff = 0;
                run(&mut res, work.task, Some(work), &mut hooks)?;
                work_loop(&mut res, &mut hooks)?;
                shared.busy.fetch_sub(1, Ordering::AcqRel);
                shared.idle[me].store(true, Ordering::Release);
            }
            // A pending hand-off keeps `busy` above zero until it is taken.
            None if shared.busy.load(Ordering::Acquire) == 0 && shared.queue_empty() => break,
            None => {
                backoff = (backoff + 1).min(8);
                if backoff < 4 {
                    thread::yield_now();
                } else {
                    thread::park_timeout(Duration::from_micros(25 << backoff.min(6)));
                }
            }
        }
    }
    // Wake passive waiters so they notice termination.
    for w in 0..shared.idle.len() {
        shared.unpark(w);
    }
    Ok(res)
}

fn steal(me: usize, shared: &Shared<'_>) -> Option<StolenWork> {
    let victim = (0..shared.boards.len())
        .filter(|&w| w != me)
        .map(|w| (w, shared.boards[w].lock().unwrap().load()))
        .filter(|&(_, load)| load > 0.0)
        .max_by(|a, b| a.1.total_cmp(&b.1))?;
    let work = shared.boards[victim.0].lock().unwrap().split()?;
    shared.steals.fetch_add(1, Ordering::Relaxed);
    Some(work)
}
