//! Command-line pipeline: configuration, ingestion, and the staged run that
//! generates data, builds proxy units, trains, converts, and verifies.

pub mod config;
pub mod ingest;
pub mod pipeline;

pub use config::{parse_config, ConfigError, ExperimentConfig, InputFormat};
pub use ingest::ingest_external;
pub use pipeline::{run_pipeline, synthetic_spec, Check, RunSummary, Stage};
