//! Experiment harness: config parsing, sweep execution, CSV output.

pub mod config;
pub mod csv;
pub mod runner;

pub use config::{parse_config, EstimatorKind, ExperimentConfig, LambdaSpec, SweepAxis};
pub use csv::{write_agg_csv, write_csv, write_raw_csv, AGG_HEADER, RAW_HEADER};
pub use runner::{aggregate, run_cell, run_sweep, AggRecord, RawRecord};
