//! Experiment tooling for the UAV-swarm MEC simulator: flat-file
//! configuration, seeded sweep execution with CSV output, and trend
//! summaries.

pub mod config_file;
pub mod stats;
pub mod summary;
pub mod sweep;

pub use config_file::{apply_key, dump_config, load_config, parse_config, ConfigFileError};
pub use summary::{render, summarize, Summary};
pub use sweep::{
    load_sweep_spec, parse_csv, parse_sweep_spec, rows_to_csv, run_cell, run_sweep, ResultRow,
    SweepParam, SweepSpec, CSV_HEADER,
};
