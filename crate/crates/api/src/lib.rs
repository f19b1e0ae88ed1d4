//! CLI commands and the read-only HTTP service for kinvis registries.

pub mod commands;
pub mod error;
pub mod server;

pub use error::CliError;
