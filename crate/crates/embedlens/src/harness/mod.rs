//! Config-driven experiment sweeps.
//!
//! A sweep takes a JSON grid definition (datasets x noise levels x
//! dimensions x transforms x repetitions x metrics) and produces one
//! long-format result row per metric evaluation, plus an optional per-cell
//! summary. The contract that matters most here is determinism: the same
//! config and base seed produce a byte-identical results file no matter how
//! many worker threads run the sweep, because every unit of work derives
//! its seed from `base_seed + repetition` and rows are emitted in a fixed
//! lexicographic cell order.
//!
//! Failures are isolated per row: a cell that cannot be computed (say, an
//! exact inversion of a singular covariance) yields a marker row with a
//! `NaN` value and `error` in the `inversion_strategy` column, and the
//! sweep keeps going.

mod config;
mod results;
mod summary;
mod sweep;

pub use config::{ExperimentConfig, MetricSpec};
pub use results::{
    parse_results_csv, read_results_csv, results_to_csv, results_to_json, write_results,
    OutputFormat, ResultRow, RESULTS_HEADER,
};
pub use summary::{summarize, summary_to_json, Summary, SummaryCell};
pub use sweep::{evaluate_pair, run_experiment};
