//! Scenario files, presets, runs, sweeps and the acceptance suite behind the `qpiston` binary.

pub mod acceptance;
pub mod error;
pub mod presets;
pub mod run;
pub mod scenario;
pub mod sweep;
