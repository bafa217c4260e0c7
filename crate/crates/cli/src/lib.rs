//! Command implementations behind the `varpremia` binary.

pub mod artifact;
pub mod commands;
pub mod config;
pub mod error;
