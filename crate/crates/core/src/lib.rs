//! Core of a beamwidth-aware mmWave V2V scheduling simulator.
//!
//! Transmitters learn neighbor positions and peer reservations from periodic
//! sub-6GHz awareness messages, pick the narrowest beamwidth whose sector
//! grouping fits their free scheduling intervals, and serve each group with
//! one directional burst. Everything here is pure computation over `alloc`;
//! file formats, configuration and the command line live in the `beamsched`
//! crate.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod antenna;
pub mod control;
pub mod engine;
pub mod error;
pub mod geometry;
pub mod metrics;
pub mod phy;
pub mod rng;
pub mod scenario;
pub mod scheduler;

pub use antenna::{AntennaModel, Beamwidth, BeamwidthLadder};
pub use engine::{run, run_replications, PeriodRecord, Policy, SimConfig, TxRecord};
pub use error::{Error, Result};
pub use geometry::{Bearing, Position};
pub use metrics::{BoxStats, MetricsReport};
pub use phy::PhyConfig;
pub use scenario::{ScenarioConfig, Vehicle};
pub use scheduler::SchedulingPeriod;
