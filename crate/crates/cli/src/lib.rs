//! Command-line front end: parameter resolution, subcommands and exit codes.

pub mod app;
pub mod commands;
pub mod config;
pub mod error;
