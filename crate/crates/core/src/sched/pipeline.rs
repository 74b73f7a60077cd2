//! Per-slot composition of beam selection, user selection and power allocation.
//!
//! | solution | BSel  | USel            | PA        |
//! |----------|-------|-----------------|-----------|
//! | B        | RR    | PBS             | EPA       |
//! | S0       | RR    | PBS+            | EPA       |
//! | S1       | WSRB  | PBS+ (all B_p)  | EPA       |
//! | S2       | WSRB  | PBS+ then IDD   | EPA again |
//! | S2WF     | WSRB  | PBS+ then IDD   | WF        |

use serde::Serialize;

use super::beam_select::{rr_beam_select, wsrb_beam_select};
use super::idd::idd;
use super::pbs::{pbs_plus, PbsParams, PerBeamOutcome};
use super::pf::PfState;
use crate::beams::{BeamAssignment, EffectiveChannels};
use crate::config::{Solution, SystemConfig};
use crate::error::Result;
use crate::link::{epa, slot_throughput, waterfill, LinkParams, PowerAllocation};

/// Everything a slot needs besides the PF state.
#[derive(Debug, Clone, Copy)]
pub struct SlotContext<'a> {
    pub eff: &'a EffectiveChannels,
    pub assignment: &'a BeamAssignment,
    pub link: &'a LinkParams,
    pub num_rf_chains: usize,
    pub pbs_plus: PbsParams,
    pub idd_threshold: f64,
}

impl<'a> SlotContext<'a> {
    pub fn new(
        cfg: &SystemConfig,
        eff: &'a EffectiveChannels,
        assignment: &'a BeamAssignment,
        link: &'a LinkParams,
    ) -> Self {
        Self {
            eff,
            assignment,
            link,
            num_rf_chains: cfg.num_rf_chains,
            pbs_plus: PbsParams {
                patience: cfg.pbs_plus_patience,
                step: cfg.pbs_plus_step,
            },
            idd_threshold: cfg.idd_threshold,
        }
    }

    /// `L_sel = min(|B_p|, K)`.
    pub fn beam_budget(&self) -> usize {
        self.assignment.num_preferred().min(self.num_rf_chains)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct SlotCounters {
    /// Tentative sum-rate evaluations summed over every beam run this slot.
    pub pbs_evaluations: usize,
    /// Largest evaluation count of a single beam.
    pub pbs_max_beam_evaluations: usize,
    pub pbs_iterations: usize,
    pub bsel_comparisons: usize,
    pub idd_pair_checks: usize,
    /// Largest number of pair checks on a single PRB.
    pub idd_max_prb_checks: usize,
    pub idd_dropped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlotSchedule {
    pub solution: Solution,
    pub slot: usize,
    /// Active BS beams, ascending.
    pub selected_beams: Vec<usize>,
    /// `z_c`: UEs transmitting on each PRB, ascending.
    pub prb_users: Vec<Vec<usize>>,
    #[serde(skip)]
    pub powers: PowerAllocation,
    /// Realized `lambda_u` with full inter-beam interference.
    pub throughput: Vec<f64>,
    pub counters: SlotCounters,
}

impl SlotSchedule {
    /// PRBs of each UE.
    pub fn prbs_of_ue(&self) -> Vec<Vec<usize>> {
        prbs_of_ue_from(&self.prb_users, self.throughput.len())
    }
}

fn prbs_of_ue_from(prb_users: &[Vec<usize>], num_ues: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new(); num_ues];
    for (c, users) in prb_users.iter().enumerate() {
        for &u in users {
            out[u].push(c);
        }
    }
    out
}

fn run_beams(beams: &[usize], params: PbsParams, weights: &[f64], ctx: &SlotContext) -> Vec<PerBeamOutcome> {
    beams
        .iter()
        .map(|&b| pbs_plus(b, ctx.assignment.users_of(b), weights, ctx.eff, ctx.link, params))
        .collect()
}

fn count_pbs(counters: &mut SlotCounters, outcomes: &[PerBeamOutcome]) {
    counters.pbs_evaluations = outcomes.iter().map(|o| o.evaluations).sum();
    counters.pbs_max_beam_evaluations = outcomes.iter().map(|o| o.evaluations).max().unwrap_or(0);
    counters.pbs_iterations = outcomes.iter().map(|o| o.iterations).sum();
}

pub fn run_slot(solution: Solution, slot: usize, pf: &PfState, ctx: &SlotContext) -> Result<SlotSchedule> {
    let weights = pf.weights();
    let preferred = ctx.assignment.preferred_beams();
    let l_sel = ctx.beam_budget();
    let num_prbs = ctx.eff.num_prbs();
    let num_ues = ctx.assignment.num_ues();
    let mut counters = SlotCounters::default();

    let (selected_beams, outcomes) = match solution {
        Solution::B | Solution::S0 => {
            let params = if solution == Solution::B {
                PbsParams::BASELINE
            } else {
                ctx.pbs_plus
            };
            let beams = rr_beam_select(&preferred, slot, l_sel);
            counters.bsel_comparisons = beams.len();
            let outcomes = run_beams(&beams, params, &weights, ctx);
            (beams, outcomes)
        }
        Solution::S1 | Solution::S2 | Solution::S2WF => {
            let all = run_beams(&preferred, ctx.pbs_plus, &weights, ctx);
            let beams = wsrb_beam_select(&all, l_sel);
            counters.bsel_comparisons = all.len();
            count_pbs(&mut counters, &all);
            let kept = all.into_iter().filter(|o| beams.contains(&o.beam)).collect();
            (beams, kept)
        }
    };
    if matches!(solution, Solution::B | Solution::S0) {
        count_pbs(&mut counters, &outcomes);
    }

    let mut prb_users: Vec<Vec<usize>> = vec![Vec::new(); num_prbs];
    for o in &outcomes {
        for (c, owner) in o.prb_owner.iter().enumerate() {
            if let Some(u) = owner {
                prb_users[c].push(*u);
            }
        }
    }
    prb_users.iter_mut().for_each(|z| z.sort_unstable());
    let mut powers = epa(&prbs_of_ue_from(&prb_users, num_ues), num_prbs, ctx.link.ue_power);

    if matches!(solution, Solution::S2 | Solution::S2WF) {
        for (c, users) in prb_users.iter_mut().enumerate() {
            let out = idd(c, users, &powers, ctx.eff, ctx.idd_threshold)?;
            counters.idd_pair_checks += out.pair_checks;
            counters.idd_max_prb_checks = counters.idd_max_prb_checks.max(out.pair_checks);
            counters.idd_dropped += out.dropped.len();
            *users = out.kept;
        }
        powers = epa(&prbs_of_ue_from(&prb_users, num_ues), num_prbs, ctx.link.ue_power);
    }

    if solution == Solution::S2WF {
        for (u, prbs) in prbs_of_ue_from(&prb_users, num_ues).into_iter().enumerate() {
            if prbs.is_empty() {
                continue;
            }
            let gains: Vec<f64> = prbs.iter().map(|&c| ctx.eff.signal_gain(c, u)).collect();
            // A UE with no usable gain anywhere keeps its equal split.
            if let Ok(p) = waterfill(&gains, ctx.link.noise, ctx.link.ue_power) {
                powers.set_row(u, &prbs, &p);
            }
        }
        // PRBs left without power are not transmitted on.
        for (c, users) in prb_users.iter_mut().enumerate() {
            users.retain(|&u| powers.get(c, u) > 0.0);
        }
    }

    let throughput = (0..num_ues)
        .map(|u| slot_throughput(u, &prb_users, &powers, ctx.eff, ctx.link))
        .collect();

    Ok(SlotSchedule {
        solution,
        slot,
        selected_beams,
        prb_users,
        powers,
        throughput,
        counters,
    })
}
