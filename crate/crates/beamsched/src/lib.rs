//! Scenario matrices, file formats and the command-line front end for the
//! mmWave beam scheduling simulator in `beamsched-core`.

pub mod cli;
pub mod config;
pub mod output;
pub mod runner;

pub use beamsched_core as core;
