//! Sweeps over β and anchor grids, driven by one TOML config and written
//! out as CSV tables.

pub mod commands;
pub mod config;
pub mod table;

pub use commands::{
    cmd_compare, cmd_diagnose, cmd_omega, cmd_poisson, cmd_solve, cmd_theory, model_file_name, obtain_models, Report,
};
pub use config::{ExperimentConfig, BETA_CAP};
