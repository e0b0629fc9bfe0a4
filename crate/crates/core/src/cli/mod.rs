//! Configuration files, experiment dispatch and result comparison behind
//! the `qc` binary.

pub mod compare;
pub mod config;
pub mod run;

pub use compare::{compare, Comparison};
pub use config::{default_text, Experiment, RunConfig};
pub use run::{run, run_benchmark, Benchmark, Outcome};
