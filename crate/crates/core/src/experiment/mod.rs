//! Configuration, initial data and the command layer behind the CLI.

pub mod commands;
pub mod config;
pub mod initial;

pub use commands::{
    cmd_classify, cmd_constants, cmd_ground_state, cmd_simulate, cmd_sweep, cmd_well, write_artifacts, Artifact,
    RunSummary,
};
pub use config::{parse, ExperimentConfig};
