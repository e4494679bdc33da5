//! Experiment configuration, orchestration of folds × methods × k, output
//! layout and method comparisons.

mod compare;
mod config;
mod format;
mod manifest;
mod output;
mod results;
mod run;

pub use compare::{compare, Comparison, QueryVerdict, FIRST_Q, LAST_Q};
pub use config::{prepare, DatasetSource, ExperimentConfig, Metric, MetricKind, SignificancePair, TauSetting, DEFAULT_K};
pub use format::{fmt_epsilon, fmt_num};
pub use manifest::{
    blob_hash, input_hash, CellFailure, DatasetSummary, FileEntry, FoldTiming, RunManifest, TauRecord, MANIFEST_FILE,
};
pub use output::{ledger_file, write_all, LEDGER_DIR, SIGNIFICANCE_FILE, SUMMARY_FILE};
pub use results::{CellValues, ResultSet};
pub use run::{
    build_engine, execute, query_order, run, run_cell, run_cell_traced, CellKey, CellOutput, FoldContext, RunOutcome,
};
