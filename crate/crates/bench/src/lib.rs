//! Benchmark harness: file formats, workload generators, the staged
//! per-query pipeline and CSV reports.

pub mod cli;
pub mod generate;
pub mod io;
pub mod pipeline;
pub mod report;
