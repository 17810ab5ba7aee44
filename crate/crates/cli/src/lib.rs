//! Configuration-driven experiment runner for the kfw solvers.

pub mod config;
pub mod error;
pub mod mm;
pub mod runner;

pub use config::{load_config, parse_config, RunConfig};
pub use error::{CliError, ConfigError};
pub use runner::{build_problem, certify_point, export_problem, run_compare, RunSummary, TRACE_HEADER};
