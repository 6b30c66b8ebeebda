//! Experiment surface: configuration, Monte Carlo sweeps, file formats, CLI.

pub mod cli;
pub mod config;
pub mod iq;
pub mod mc;

pub use cli::cli_main;
pub use config::{EstimatorChoice, McConfig};
pub use iq::{read_iq, write_iq};
pub use mc::{
    read_csv, run_point, run_sweep, run_sweep_with, run_trial, write_csv, Execution, McResult,
    McRow, SweepPoint, TrialOutcome,
};
