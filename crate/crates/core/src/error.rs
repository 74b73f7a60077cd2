use thiserror::Error;

use crate::config::Violation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {}", format_violations(.0))]
    InvalidConfig(Vec<Violation>),

    #[error("cannot parse configuration: {0}")]
    ConfigParse(String),

    #[error("distance {distance_m} m is inside exclusion zone of radius {exclusion_m} m")]
    InsideExclusionZone { distance_m: f64, exclusion_m: f64 },

    #[error("UE {ue} is not scheduled on PRB {prb}")]
    NotScheduled { ue: usize, prb: usize },

    #[error("UE {ue} is scheduled on PRB {prb} with zero power")]
    ZeroPower { ue: usize, prb: usize },

    #[error("water filling needs at least one PRB with positive gain")]
    NoUsableGain,

    #[error("unknown solution `{0}` (expected one of B, S0, S1, S2, S2WF)")]
    UnknownSolution(String),

    #[error("invalid sweep plan: {0}")]
    InvalidPlan(String),

    #[error("malformed channel dump: {0}")]
    ChannelFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn format_violations(v: &[Violation]) -> String {
    v.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}
