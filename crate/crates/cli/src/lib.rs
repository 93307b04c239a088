//! Command line driver: configuration, subcommands and run artifacts.

pub mod commands;
pub mod config;
pub mod error;
pub mod expr;
pub mod output;
