//! Monte-Carlo harness and command line plumbing for `tdoaspace`.

pub mod config;
pub mod error;
pub mod harness;
pub mod io;
pub mod seed;

pub use config::{ExperimentConfig, Plan};
pub use error::{ExperimentError, Result};
pub use harness::{run_experiment, run_plan, simulate, write_csv, ResultRow, CSV_HEADER};
