//! `bdsm run` argument handling.

use std::path::PathBuf;
use std::time::Duration;

use bdsm_core::matcher::MatchConfig;
use bdsm_core::scheduler::{SchedulerConfig, StealMode};
use bdsm_core::session::{Executor, SessionConfig};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::generate::{generate_queries, generate_stream, GenerateError, QuerySpec, StreamSpec};
use crate::io::{self, FormatError};
use crate::pipeline::{run_pipeline, PipelineConfig, PipelineError, QueryInput, RunReport};
use crate::report::{emit_report, ReportError};

#[derive(Debug, Parser)]
#[command(name = "bdsm", version, about = "Batch-dynamic subgraph matching benchmark")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Match queries against a data graph over a stream of update batches.
    Run(RunArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Switch {
    On,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Stealing {
    Off,
    Passive,
    Active,
}

impl From<Stealing> for StealMode {
    fn from(s: Stealing) -> Self {
        match s {
            Stealing::Off => StealMode::Off,
            Stealing::Passive => StealMode::Passive,
            Stealing::Active => StealMode::Active,
        }
    }
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Data graph in `v`/`e` format.
    #[arg(long)]
    pub graph: PathBuf,
    /// Query files, one query each.
    #[arg(long, num_args = 1.., required_unless_present = "gen_queries", conflicts_with = "gen_queries")]
    pub query: Vec<PathBuf>,
    /// Extract queries from the graph: `<dense|sparse|tree>,<size>,<count>`.
    #[arg(long, value_parser = parse_query_spec)]
    pub gen_queries: Option<QuerySpec>,
    /// Update stream file.
    #[arg(long, required_unless_present = "gen_stream", conflicts_with = "gen_stream")]
    pub stream: Option<PathBuf>,
    /// Sample a stream: `<rate>,<insert|delete|mixed>,<batches>[,<k-core>]`.
    #[arg(long, value_parser = parse_stream_spec)]
    pub gen_stream: Option<StreamSpec>,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    /// Tasks claimed from the queue at a time.
    #[arg(long, default_value_t = 1)]
    pub group_size: usize,
    #[arg(long, value_enum, default_value_t = Stealing::Active)]
    pub stealing: Stealing,
    #[arg(long, value_enum, default_value_t = Switch::On)]
    pub coalesce: Switch,
    /// Per-query time limit in seconds.
    #[arg(long, default_value_t = 1800.0)]
    pub timeout: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Run the stages one after another instead of overlapping them.
    #[arg(long)]
    pub no_pipeline: bool,
    #[arg(long, default_value = "bdsm-out")]
    pub out: PathBuf,
}

fn parse_query_spec(s: &str) -> Result<QuerySpec, String> {
    s.parse().map_err(|e: GenerateError| e.to_string())
}

fn parse_stream_spec(s: &str) -> Result<StreamSpec, String> {
    s.parse().map_err(|e: GenerateError| e.to_string())
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Generate(#[from] GenerateError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error("{0}")]
    Invalid(String),
}

impl RunArgs {
    pub fn pipeline_config(&self) -> Result<PipelineConfig, CliError> {
        if self.workers == 0 || self.group_size == 0 {
            return Err(CliError::Invalid("--workers and --group-size must be at least 1".into()));
        }
        if !(self.timeout > 0.0) {
            return Err(CliError::Invalid("--timeout must be positive".into()));
        }
        let executor = Executor::Pool(SchedulerConfig {
            workers: self.workers,
            group_size: self.group_size,
            stealing: self.stealing.into(),
            ..SchedulerConfig::default()
        });
        Ok(PipelineConfig {
            session: SessionConfig {
                matching: MatchConfig { coalesce: self.coalesce == Switch::On, ..MatchConfig::default() },
                executor,
                ..SessionConfig::default()
            },
            timeout: Some(Duration::from_secs_f64(self.timeout)),
            pipelined: !self.no_pipeline,
        })
    }
}

/// Loads or generates the workload, runs it and writes the CSVs to `--out`.
pub fn run(args: &RunArgs) -> Result<RunReport, CliError> {
    let config = args.pipeline_config()?;
    let records = io::load_graph(&args.graph)?;
    let graph = records.build().map_err(PipelineError::from)?;
    let snapshot = graph.snapshot();
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    std::fs::create_dir_all(&args.out).map_err(ReportError::from)?;

    let queries: Vec<QueryInput> = match &args.gen_queries {
        Some(spec) => generate_queries(&snapshot, spec, &mut rng)?
            .into_iter()
            .enumerate()
            .map(|(id, query)| QueryInput { id, category: Some(spec.category), query })
            .collect(),
        None => args
            .query
            .iter()
            .enumerate()
            .map(|(id, p)| Ok(QueryInput { id, category: None, query: io::load_query(p)? }))
            .collect::<Result<_, FormatError>>()?,
    };
    if args.gen_queries.is_some() {
        let dir = args.out.join("queries");
        std::fs::create_dir_all(&dir).map_err(ReportError::from)?;
        for q in &queries {
            std::fs::write(dir.join(format!("q{}.txt", q.id)), io::format_query(&q.query)).map_err(ReportError::from)?;
        }
    }

    let stream = match (&args.gen_stream, &args.stream) {
        (Some(spec), _) => {
            let s = generate_stream(&snapshot, spec, &mut rng)?;
            std::fs::write(args.out.join("stream.txt"), io::format_stream(&s.batches)).map_err(ReportError::from)?;
            s.batches
        }
        (None, Some(path)) => io::load_stream(path)?,
        (None, None) => unreachable!("clap requires a stream source"),
    };
    if stream.iter().any(|b| b.len() == 1) {
        log::warn!("stream contains single-update batches");
    }
    log::info!("{} queries, {} batches, {} updates", queries.len(), stream.len(), stream.iter().map(|b| b.len()).sum::<usize>());

    let report = run_pipeline(&records, &queries, &stream, &config)?;
    emit_report(&report, &args.out)?;
    Ok(report)
}
