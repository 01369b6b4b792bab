//! File-level front end: byte files to per-node shard files and back.

pub mod commands;
pub mod error;
pub mod shard;

pub use error::CliError;
