//! Command-line harness: experiment configuration plus the subcommands
//! behind the `schedlab` binary.

mod commands;
mod config;

pub use commands::{
    cmd_compare, cmd_evaluate, cmd_generate, cmd_simulate, cmd_train, CommandOutput,
    SCHEDULING_WINDOW_SECONDS,
};
pub use config::{ExperimentConfig, SplitMode};
