//! Experiment harness: configuration, trajectory files and the commands
//! behind the command-line tool.

pub mod commands;
pub mod config;
pub mod trajfile;

pub use commands::{
    cmd_figures, cmd_physics, cmd_search, cmd_validate, Check, PhysicsReport, SearchOutcome, ValidationReport,
};
pub use config::{ConfigLayer, ExperimentConfig, Format, Mode};
pub use trajfile::TrajectoryFile;
