//! Batch attack harness: dataset ingestion, oracle/encoder plumbing,
//! suite execution with metric aggregation, and transferability evaluation.
//! The attack itself lives in the `hardlabel` crate.

pub mod cache;
pub mod dataset;
pub mod encoder;
pub mod files;
pub mod remote;
pub mod report;
pub mod suite;
pub mod synth;
pub mod transfer;

pub use dataset::{load_dataset, Dataset, DatasetError, Example, Format, TaskKind};
pub use remote::RemoteOracle;
pub use suite::{aggregate, run_suite, ExampleRecord, RecordStatus, SuiteContext, SuiteMetrics};
