//! CSV output of a run.

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::pipeline::RunReport;

#[derive(Serialize)]
struct LatencyRow {
    query_id: usize,
    category: String,
    size: usize,
    seconds: f64,
    solved: bool,
}

#[derive(Serialize)]
struct DeltaRow {
    query_id: usize,
    batch: usize,
    positive: usize,
    negative: usize,
}

#[derive(Serialize)]
struct StageRow {
    query_id: usize,
    batch: usize,
    preprocess_s: f64,
    match_s: f64,
    ratio: f64,
}

#[derive(Serialize)]
struct UtilizationRow {
    worker: usize,
    busy_seconds: f64,
    total_seconds: f64,
    fraction: f64,
}

fn to_csv<T: Serialize>(header: &[&str], rows: impl IntoIterator<Item = T>) -> Result<String, csv::Error> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn latency_csv(r: &RunReport) -> Result<String, csv::Error> {
    to_csv(
        &["query_id", "category", "size", "seconds", "solved"],
        r.queries.iter().map(|q| LatencyRow {
            query_id: q.id,
            category: q.category.map_or_else(|| "file".to_string(), |c| c.to_string()),
            size: q.size,
            seconds: q.seconds,
            solved: q.solved,
        }),
    )
}

pub fn deltas_csv(r: &RunReport) -> Result<String, csv::Error> {
    to_csv(
        &["query_id", "batch", "positive", "negative"],
        r.queries.iter().flat_map(|q| {
            q.batches.iter().map(|b| DeltaRow { query_id: q.id, batch: b.batch, positive: b.positive, negative: b.negative })
        }),
    )
}

pub fn stages_csv(r: &RunReport) -> Result<String, csv::Error> {
    to_csv(
        &["query_id", "batch", "preprocess_s", "match_s", "ratio"],
        r.queries.iter().flat_map(|q| {
            q.batches.iter().map(|b| StageRow {
                query_id: q.id,
                batch: b.batch,
                preprocess_s: b.preprocess.as_secs_f64(),
                match_s: b.matching.as_secs_f64(),
                ratio: b.ratio(),
            })
        }),
    )
}

pub fn utilization_csv(r: &RunReport) -> Result<String, csv::Error> {
    to_csv(
        &["worker", "busy_seconds", "total_seconds", "fraction"],
        r.utilization.workers.iter().enumerate().map(|(worker, w)| UtilizationRow {
            worker,
            busy_seconds: w.busy.as_secs_f64(),
            total_seconds: w.total.as_secs_f64(),
            fraction: w.fraction(),
        }),
    )
}

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Writes `latency.csv`, `deltas.csv`, `stages.csv` and `utilization.csv` into `dir`.
pub fn emit_report(r: &RunReport, dir: &Path) -> Result<(), ReportError> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("latency.csv"), latency_csv(r)?)?;
    fs::write(dir.join("deltas.csv"), deltas_csv(r)?)?;
    fs::write(dir.join("stages.csv"), stages_csv(r)?)?;
    fs::write(dir.join("utilization.csv"), utilization_csv(r)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::{BatchReport, QueryReport};
    use std::time::Duration;

    #[test]
    fn empty_report_is_header_only() {
        let r = RunReport::default();
        assert_eq!(latency_csv(&r).unwrap(), "query_id,category,size,seconds,solved\n");
        assert_eq!(deltas_csv(&r).unwrap(), "query_id,batch,positive,negative\n");
        assert_eq!(stages_csv(&r).unwrap(), "query_id,batch,preprocess_s,match_s,ratio\n");
        assert_eq!(utilization_csv(&r).unwrap(), "worker,busy_seconds,total_seconds,fraction\n");
    }

    #[test]
    fn deltas_golden() {
        let b = |batch, positive, negative| BatchReport {
            batch,
            positive,
            negative,
            preprocess: Duration::from_millis(1),
            matching: Duration::from_millis(3),
            visits: 0,
        };
        let r = RunReport {
            queries: vec![QueryReport {
                id: 0,
                category: None,
                size: 4,
                seconds: 0.5,
                solved: true,
                batches: vec![b(0, 4, 0), b(1, 2, 0), b(2, 0, 2)],
            }],
            ..RunReport::default()
        };
        assert_eq!(deltas_csv(&r).unwrap(), "query_id,batch,positive,negative\n0,0,4,0\n0,1,2,0\n0,2,0,2\n");
        assert_eq!(stages_csv(&r).unwrap().lines().nth(1).unwrap(), "0,0,0.001,0.003,0.25");
        assert!(latency_csv(&r).unwrap().ends_with("0,file,4,0.5,true\n"));
    }
}
