//! Configuration, orchestration and result files for the `macov` binary.

pub mod commands;
pub mod config;
pub mod output;

pub use commands::{cmd_calibrate_noise, cmd_compare, cmd_coverage, cmd_snr, cmd_sweep, SweepAxis};
pub use config::{load_config, parse_config, ScenarioConfig};
