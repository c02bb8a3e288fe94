//! Configuration, output files, run manifests and the CLI subcommands.

pub mod commands;
pub mod config;
pub mod output;
pub mod svg;

pub use commands::{evolve_command, kernel_command, spread_command, verify_command, wave_command, Outcome};
pub use config::{env_overrides, parse_config, parse_config_str, Override, RunConfig};
pub use output::{content_hash, emit_outputs, Artifact, RunManifest};
