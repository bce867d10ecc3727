//! Std companion to `chaos-stein-core`: a rayon executor for the chunked
//! Monte Carlo contract, kernel JSON files, tabular CSV/JSON output and
//! the `chaos-stein` batch CLI.

pub use chaos_stein_core as core;

pub mod cli;
pub mod commands;
pub mod exec;
pub mod kernel_json;
pub mod random;
pub mod selftest;
pub mod table;
