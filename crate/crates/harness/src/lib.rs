//! Experiment harness around `blowsim-core`: configuration files, training
//! and evaluation runs, sweeps, CSV metrics, checkpoints and map dumps.

pub mod checkpoint;
pub mod config;
pub mod pgm;
pub mod run;

pub use config::{Preset, Resolved, RunConfig};
