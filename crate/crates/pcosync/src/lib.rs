//! Scenario files, trace outputs and seeded sweeps for the `pcosync-core`
//! simulator, plus the `pcosync` command line.

pub mod config;
pub mod output;
pub mod sweep;

pub use config::{ConfigError, Prepared, ScenarioConfig, SweepConfig};
pub use output::{write_run, RunSummary};
pub use sweep::{run_one, run_sweep, Aggregate, RunError, SweepError};
