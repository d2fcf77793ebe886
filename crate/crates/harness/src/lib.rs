//! Experiment presets, run manifests and the scenario runner behind the
//! `hyperflow` command.

// negated float comparisons reject NaN on purpose; index loops mirror the stencils
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod config;
pub mod manifest;
pub mod scenario;

pub use config::{ConfigError, ExperimentConfig, Scenario};
pub use manifest::{Criterion, RunManifest};
pub use scenario::{replay, run_command, run_scenario};
