//! Benchmark harness for the SOAA optimizer: seeded runs, head-to-head
//! comparisons against Adam/AdamW, CSV output and aggregate statistics.

pub mod cli;
pub mod compare;
pub mod error;
pub mod output;
pub mod run;
pub mod spec;
pub mod stats;

pub use compare::{run_compare, write_outputs, CompareOutcome};
pub use error::{HarnessError, Result};
pub use run::{run_on, run_single, RunRecord, RunRow};
pub use spec::{BenchConfig, OptimizerSpec, ProblemSpec, RunSpec};
pub use stats::{summarize, CheckpointStat, SummaryStats};
