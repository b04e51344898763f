//! Experiment harness around `moweight-core`: config loading, run
//! orchestration, front comparison, data export and oracle checks.

pub mod compare;
pub mod config;
pub mod export;
pub mod failure;
pub mod oracle;
pub mod run;

pub use config::{resolve_out, Arm, HarnessConfig, DEFAULT_OUT_ROOT, OUT_ENV};
pub use failure::{Failure, EXIT_CONFIG, EXIT_OK, EXIT_ORACLE, EXIT_RUNTIME};
