//! Benchmark harness and single-run drivers behind the `rinst` binary.

pub mod config;
pub mod diag;
pub mod harness;
pub mod methods;
pub mod plot;
pub mod report;
pub mod single;
pub mod tuning;
