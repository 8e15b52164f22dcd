//! Scenario files, figure presets, CSV trajectories, convergence sweeps,
//! closed-form tables and fits for the `twophoton` command.

pub mod config;
pub mod error;
pub mod fitcmd;
pub mod oracle;
pub mod scenario;
pub mod sweep;

pub use config::{preset, ConfigError, InitialState, Outputs, ScenarioConfig, PRESETS};
pub use error::{CliError, CliResult};
pub use fitcmd::{fit_column, format_fit, FitRequest};
pub use oracle::{oracle_eval, Formula, OracleParams};
pub use scenario::{csv_header, format_csv, run_records, run_scenario, write_atomic};
pub use sweep::{convergence_sweep, format_convergence, ConvergenceRow};
