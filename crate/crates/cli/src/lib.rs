//! Batch driver: configuration, the four subcommands and their tables.

pub mod commands;
pub mod config;
pub mod report;
