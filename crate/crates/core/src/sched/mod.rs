//! Scheduling building blocks and the five per-slot pipelines.

mod beam_select;
mod idd;
mod pbs;
mod pf;
mod pipeline;

pub use beam_select::{rr_beam_select, wsrb_beam_select};
pub use idd::{idd, IddOutcome};
pub use pbs::{pbs_plus, PbsParams, PerBeamOutcome};
pub use pf::PfState;
pub use pipeline::{run_slot, SlotContext, SlotCounters, SlotSchedule};
