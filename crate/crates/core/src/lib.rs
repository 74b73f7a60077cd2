//! Uplink radio resource management for a single-cell, codebook-based hybrid
//! beamforming OFDMA system.
//!
//! The crate covers the full chain of one simulated cell:
//!
//! - [`config`]: system parameters, the MCS table and sweep plans
//! - [`channel`]: UE placement, path loss and the wideband cluster channel
//! - [`beams`]: analog codebooks, beam alignment and effective channels
//! - [`link`]: SINR, staircase rate, equal power and water-filling allocation
//! - [`sched`]: PF state, PBS/PBS+, RR and WSRB beam selection, IDD, and the
//!   B / S0 / S1 / S2 / S2WF slot pipelines
//! - [`sim`]: realizations, sweeps and the geometric-mean metric

pub mod beams;
pub mod channel;
pub mod config;
pub mod error;
pub mod link;
pub mod sched;
pub mod sim;

pub use config::{full_config, desk_config, Solution, SweepAxis, SweepPlan, SystemConfig};
pub use error::{Error, Result};
