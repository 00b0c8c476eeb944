use std::fs;
use std::path::Path;

use bdsm_bench::cli::{run, Cli, Command, RunArgs};
use bdsm_bench::generate::{synthetic_graph, SyntheticSpec};
use bdsm_bench::io::{format_graph, load_stream};
use clap::Parser;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GRAPH: &str = "v 0 1\nv 1 1\nv 2 2\nv 3 2\nv 4 2\nv 5 2\nv 6 2\nv 7 4\nv 8 3\nv 9 3\n\
e 0 3\ne 0 4\ne 0 6\ne 1 5\ne 1 6\ne 5 6\ne 5 9\ne 2 3\ne 2 4\ne 2 8\ne 3 8\ne 4 5\ne 4 9\ne 7 9\n";
const QUERY: &str = "v 0 1\nv 1 2\nv 2 2\nv 3 3\ne 0 1\ne 0 2\ne 1 2\ne 1 3\n";

fn args(dir: &Path, extra: &[&str]) -> RunArgs {
    let mut argv = vec!["bdsm".to_string(), "run".into(), "--graph".into(), dir.join("g.txt").display().to_string()];
    argv.extend(extra.iter().map(|s| s.to_string()));
    match Cli::try_parse_from(argv).unwrap().command {
        Command::Run(a) => a,
    }
}

fn write_inputs(dir: &Path, stream: &str) {
    fs::write(dir.join("g.txt"), GRAPH).unwrap();
    fs::write(dir.join("q.txt"), QUERY).unwrap();
    fs::write(dir.join("s.txt"), stream).unwrap();
}

#[test]
fn running_example_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    write_inputs(dir.path(), "+ 0 2\n+ 1 4\n- 4 5\n");
    let out = dir.path().join("out");
    let q = dir.path().join("q.txt").display().to_string();
    let s = dir.path().join("s.txt").display().to_string();
    let o = out.display().to_string();
    for stealing in ["off", "passive", "active"] {
        let a = args(dir.path(), &["--query", &q, "--stream", &s, "--workers", "3", "--stealing", stealing, "--out", &o]);
        let report = run(&a).unwrap();
        assert!(report.queries[0].solved);
        let deltas = fs::read_to_string(out.join("deltas.csv")).unwrap();
        assert_eq!(deltas, "query_id,batch,positive,negative\n0,0,4,0\n");
    }
    let util = fs::read_to_string(out.join("utilization.csv")).unwrap();
    assert_eq!(util.lines().count(), 4);
}

#[test]
fn zero_batches_give_empty_report() {
    let dir = tempfile::tempdir().unwrap();
    write_inputs(dir.path(), "");
    let o = dir.path().join("out");
    let a = args(
        dir.path(),
        &["--query", &dir.path().join("q.txt").display().to_string(), "--stream", &dir.path().join("s.txt").display().to_string(), "--out", &o.display().to_string()],
    );
    let r = run(&a).unwrap();
    assert!(r.queries[0].batches.is_empty());
    assert_eq!(fs::read_to_string(o.join("deltas.csv")).unwrap(), "query_id,batch,positive,negative\n");
}

fn generated_run(dir: &Path, out: &str, extra: &[&str]) -> (String, String, String) {
    let o = dir.join(out);
    let mut argv = vec!["--gen-queries", "sparse,5,4", "--gen-stream", "5%,mixed,3", "--seed", "11", "--workers", "2"];
    argv.extend_from_slice(extra);
    let os = o.display().to_string();
    argv.extend_from_slice(&["--out", &os]);
    run(&args(dir, &argv)).unwrap();
    let read = |f: &str| fs::read_to_string(o.join(f)).unwrap();
    (read("deltas.csv"), read("stream.txt"), read("queries/q0.txt"))
}

#[test]
fn seeded_runs_are_reproducible_and_pipeline_neutral() {
    let dir = tempfile::tempdir().unwrap();
    let spec = SyntheticSpec { vertices: 200, edges: 1200, labels: 4, communities: 10, intra: 0.8 };
    fs::write(dir.path().join("g.txt"), format_graph(&synthetic_graph(&spec, &mut ChaCha8Rng::seed_from_u64(5)))).unwrap();
    let a = generated_run(dir.path(), "a", &[]);
    let b = generated_run(dir.path(), "b", &[]);
    let c = generated_run(dir.path(), "c", &["--no-pipeline", "--coalesce", "off", "--stealing", "off"]);
    assert_eq!(a, b);
    assert_eq!(a, c);
    let stream = load_stream(&dir.path().join("a/stream.txt")).unwrap();
    assert_eq!(stream.len(), 3);
    assert_eq!(stream.iter().map(|b| b.len()).sum::<usize>(), 60);
}

#[test]
fn argument_errors() {
    let dir = tempfile::tempdir().unwrap();
    write_inputs(dir.path(), "+ 0 2\n");
    assert!(Cli::try_parse_from(["bdsm", "run", "--graph", "g.txt", "--stream", "s.txt"]).is_err());
    assert!(Cli::try_parse_from(["bdsm", "run", "--graph", "g", "--query", "q", "--stream", "s", "--stealing", "eager"]).is_err());
    let q = dir.path().join("q.txt").display().to_string();
    let s = dir.path().join("s.txt").display().to_string();
    let a = args(dir.path(), &["--query", &q, "--stream", &s, "--workers", "0"]);
    assert!(run(&a).is_err());
    let a = args(dir.path(), &["--query", &q, "--stream", &dir.path().join("missing.txt").display().to_string()]);
    assert!(run(&a).is_err());
}

#[test]
fn timeout_marks_query_unsolved() {
    use bdsm_bench::pipeline::{run_pipeline, PipelineConfig, QueryInput};
    use bdsm_core::graph::{EdgeUpdate, UpdateBatch};
    use bdsm_core::query::QueryGraph;
    // Every 6-vertex path in a 60-clique, found from one inserted edge.
    let n = 60u32;
    let vertices: Vec<_> = (0..n).map(|v| (v, 0)).collect();
    let edges: Vec<_> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b, None))).filter(|&(a, b, _)| (a, b) != (0, 1)).collect();
    let records = bdsm_bench::io::GraphRecords { vertices, edges };
    let query = QueryGraph::new(vec![0; 6], &[(0, 1, None), (1, 2, None), (2, 3, None), (3, 4, None), (4, 5, None)]).unwrap();
    let stream = vec![UpdateBatch::new([EdgeUpdate::insert(0, 1)]).unwrap()];
    let config = PipelineConfig { timeout: Some(std::time::Duration::from_millis(20)), ..PipelineConfig::default() };
    let r = run_pipeline(&records, &[QueryInput { id: 0, category: None, query }], &stream, &config).unwrap();
    assert!(!r.queries[0].solved);
    assert_eq!(r.mean_latency(), None);
}
