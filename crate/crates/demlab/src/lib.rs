//! Ensemble runner, reports and command-line harness for the simulations in `demlab-core`.
//!
//! Processes, graph generators and verification suites are strategies looked
//! up by name in a [`registry::Registry`]; [`ensemble::run_ensemble`] runs
//! seeded replicas in parallel and aggregates them in replica order.

// `!(x > 0.0)` guards deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod ensemble;
pub mod error;
pub mod processes;
pub mod registry;
pub mod report;
pub mod timeseries;
pub mod verify;

pub use config::ExperimentConfig;
pub use ensemble::{run_and_emit, run_ensemble, write_outputs, EnsembleOutcome};
pub use error::{HarnessError, Result};
pub use registry::Registry;
pub use report::EnsembleReport;
