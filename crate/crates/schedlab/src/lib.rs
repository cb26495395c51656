//! A workload-scheduling laboratory for batch clusters.
//!
//! The crate replays job traces through a deterministic discrete-event
//! simulator under three scheduling policies (FCFS, EASY backfilling,
//! and duration-informed DIWS) and trains the runtime-prediction models
//! DIWS plans with: a regression tree, a random forest, gradient-boosted
//! trees and a small feed-forward network.
//!
//! Module map:
//! - [`trace`]: trace parsing, splitting, feature handling, synthesis
//! - [`predict`]: the four regressors and the prediction pipeline
//! - [`eval`]: prediction-quality reports
//! - [`sim`]: policies, event engine and schedule metrics
//! - [`cli`]: the command-line harness over all of the above

pub mod cli;
pub mod error;
pub mod eval;
pub mod predict;
pub mod sim;
pub mod trace;

pub use error::{Error, Result};
