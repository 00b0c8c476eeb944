mod common;

use bdsm_core::encoding::{build_scheme, encode_all};
use bdsm_core::graph::{LabeledGraph, UpdateBatch};
use bdsm_core::oracle::{incremental_diff_oracle, NaiveGraph};
use bdsm_core::session::{MatchSession, SessionConfig};
use common::*;

fn session() -> MatchSession {
    let (v, e) = running_graph();
    MatchSession::new(LabeledGraph::build_from_edges(&v, &e).unwrap(), &running_query(), SessionConfig::default()).unwrap()
}

#[test]
fn whole_batch_gains_four() {
    let mut s = session();
    let out = s.process(UpdateBatch::new(running_updates()).unwrap()).unwrap();
    assert_eq!(out.matches.positive.len(), 4);
    assert_eq!(out.matches.negative.len(), 0);
    assert!(!out.matches.has_duplicates());

    let (v, e) = running_graph();
    let oracle = incremental_diff_oracle(&NaiveGraph::new(&v, &e), &UpdateBatch::new(running_updates()).unwrap(), &running_query()).unwrap();
    assert_eq!(out.matches.positive_set(), oracle.positive);
    assert_eq!(out.matches.negative_set(), oracle.negative);
}

#[test]
fn singleton_batches() {
    let mut s = session();
    let (v, e) = running_graph();
    let mut naive = NaiveGraph::new(&v, &e);
    let mut counts = Vec::new();
    for up in running_updates() {
        let batch = UpdateBatch::new([up]).unwrap();
        let out = s.process(batch.clone()).unwrap();
        let oracle = incremental_diff_oracle(&naive, &batch, &running_query()).unwrap();
        assert_eq!(out.matches.positive_set(), oracle.positive);
        assert_eq!(out.matches.negative_set(), oracle.negative);
        naive.apply(&batch).unwrap();
        counts.push((out.matches.positive.len(), out.matches.negative.len()));
    }
    assert_eq!(counts, [(4, 0), (2, 0), (0, 2)]);
}

#[test]
fn existing_match_and_encodings() {
    let (v, e) = running_graph();
    let g = LabeledGraph::build_from_edges(&v, &e).unwrap();
    let all = bdsm_core::oracle::enumerate_all_matches(&g, &running_query()).unwrap();
    assert!(all.contains(&vec![1, 5, 6, 9]));

    let scheme = build_scheme(&running_query(), 4, 2).unwrap();
    assert_eq!(scheme.label_bits, 3);
    assert_eq!(scheme.total_bits(), 9);

    let mut s = session();
    let before = s.encodings().get(2).unwrap().group(&scheme, 0);
    let prepared = s.prepare(UpdateBatch::new(running_updates()).unwrap()).unwrap();
    assert!(!prepared.dirty.contains(&0), "saturated vertex must stay clean");
    assert!(prepared.dirty.contains(&2));
    let after = s.encodings().get(2).unwrap().group(&scheme, 0);
    assert_eq!((before, after), (0, 1));
    let fresh = encode_all(s.graph(), &scheme).unwrap();
    assert_eq!(&fresh, s.encodings());
}

#[test]
fn match_lines_format() {
    let mut s = session();
    let out = s.process(UpdateBatch::new(running_updates()).unwrap()).unwrap();
    let lines = out.matches.lines();
    assert_eq!(lines.len(), 4);
    assert!(lines.iter().all(|l| l.starts_with("+ u0:v")));
    assert!(lines.windows(2).all(|w| w[0] <= w[1]));
}
