//! File formats, configuration, parallel execution and the subcommands of
//! the `neurocal` binary, on top of `neurocal-core`.

pub mod commands;
pub mod config;
pub mod csvio;
pub mod error;
pub mod exec;
pub mod swc;
pub mod trace;

pub use config::RunConfig;
pub use exec::RayonExecutor;
