//! Report types and subcommand implementations behind the `flatness`
//! binary.

pub mod commands;
pub mod report;
