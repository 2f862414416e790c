//! Configuration, artifact handling and subcommands behind the `legalex`
//! binary.

pub mod artifacts;
pub mod chart;
pub mod commands;
pub mod config;

pub use commands::ExtractMethod;
pub use config::{LoadedConfig, PipelineConfig};
