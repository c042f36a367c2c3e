use alloc::string::String;

use crate::antenna::Beamwidth;

/// Errors raised by the simulator core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
    #[error("degenerate geometry: coincident positions")]
    DegenerateGeometry,
    #[error("beamwidth {0} is not in the ladder")]
    InvalidBeamwidth(Beamwidth),
    #[error("invalid beamwidth ladder: {0}")]
    InvalidLadder(&'static str),
    #[error("{needed} beams do not fit in {available} available intervals")]
    Capacity { needed: usize, available: usize },
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("intended link has no coupling")]
    LinkBlocked,
    #[error("no samples to aggregate")]
    EmptyData,
    #[error("baseline throughput is zero, gain undefined")]
    UndefinedGain,
    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = core::result::Result<T, Error>;
