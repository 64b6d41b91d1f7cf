//! Configuration, artifact emission, and the subcommand implementations
//! behind the `octorbit` binary. The binary is a thin parser over these.

pub mod commands;
pub mod config;
pub mod emit;

pub use commands::OrbitArtifact;
pub use config::{Overrides, RunConfig};
