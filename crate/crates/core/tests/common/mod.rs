//! Shared fixtures and independent reference evaluations for the integration tests.
#![allow(dead_code)]

use hbf_rrm::beams::{BeamAssignment, EffectiveChannels};
use hbf_rrm::config::{desk_config, SystemConfig};
use hbf_rrm::link::{LinkParams, PowerAllocation};
use hbf_rrm::sched::{SlotContext, SlotSchedule};
use num_complex::Complex64;
use rand::Rng;

pub fn desk(num_ues: usize, num_rf_chains: usize) -> SystemConfig {
    SystemConfig {
        num_ues,
        num_rf_chains,
        ..desk_config()
    }
}

pub fn desk_link() -> LinkParams {
    LinkParams::from_config(&desk_config()).unwrap()
}

/// Staircase by linear scan: the last level whose threshold the SINR reaches.
pub fn staircase_rate(sinr: f64, link: &LinkParams) -> f64 {
    let mut eff = 0.0;
    for (t, s) in link.mcs.thresholds().iter().zip(link.mcs.efficiencies()) {
        if sinr >= *t {
            eff = *s;
        }
    }
    link.prb_bandwidth * eff
}

/// SINR straight from the complex coefficients.
pub fn sinr_from_coefficients(
    eff: &EffectiveChannels,
    prb: usize,
    u: usize,
    users: &[usize],
    powers: &PowerAllocation,
    noise: f64,
) -> f64 {
    let q = prb / eff.prbs_per_block();
    let signal = eff.get(q, u, u).norm_sqr() * powers.get(prb, u);
    let mut interference = 0.0;
    for &n in users {
        if n != u {
            interference += eff.get(q, u, n).norm_sqr() * powers.get(prb, n);
        }
    }
    signal / (interference + noise)
}

/// Drop rule on one PRB, evaluated from the full ratio matrix.
pub fn idd_reference(
    eff: &EffectiveChannels,
    prb: usize,
    users: &[usize],
    powers: &PowerAllocation,
    threshold: f64,
) -> Vec<usize> {
    let q = prb / eff.prbs_per_block();
    let m = users.len();
    let mut ratio = vec![vec![0.0; m]; m];
    for (i, &n) in users.iter().enumerate() {
        for (j, &u) in users.iter().enumerate() {
            if i != j {
                let num = eff.get(q, n, u).norm_sqr() * powers.get(prb, u);
                let den = eff.get(q, n, n).norm_sqr() * powers.get(prb, n);
                ratio[i][j] = if num == 0.0 { 0.0 } else { num / den };
            }
        }
    }
    let recorded: Vec<bool> = (0..m).map(|j| (0..m).any(|i| ratio[i][j] > threshold)).collect();
    users
        .iter()
        .zip(&recorded)
        .filter(|(_, r)| !**r)
        .map(|(u, _)| *u)
        .collect()
}

/// Greedy trace of plain per-beam selection (stop at the first non-increase,
/// one PRB per grant). Returns the PRBs of each candidate in grant order.
pub fn pbs_reference(
    candidates: &[usize],
    weights: &[f64],
    eff: &EffectiveChannels,
    link: &LinkParams,
) -> Vec<(usize, Vec<usize>)> {
    let num_prbs = eff.num_prbs();
    let q_of = |c: usize| c / eff.prbs_per_block();
    let gain = |c: usize, u: usize| eff.get(q_of(c), u, u).norm_sqr();
    let sum_rate = |u: usize, prbs: &[usize]| -> f64 {
        let p = link.ue_power / prbs.len() as f64;
        prbs.iter().map(|&c| staircase_rate(gain(c, u) * p / link.noise, link)).sum()
    };
    let mut ues: Vec<usize> = candidates.to_vec();
    ues.sort_unstable();
    let mut owned: Vec<Vec<usize>> = vec![Vec::new(); ues.len()];
    let mut sr = vec![0.0; ues.len()];
    let mut active = vec![true; ues.len()];
    let mut taken = vec![false; num_prbs];
    loop {
        if taken.iter().all(|t| *t) || !active.iter().any(|a| *a) {
            break;
        }
        let mut best: Option<(usize, usize, f64, f64)> = None;
        for i in 0..ues.len() {
            if !active[i] {
                continue;
            }
            let u = ues[i];
            // every free PRB, strongest first, lowest index on ties
            let mut pick: Option<usize> = None;
            for c in 0..num_prbs {
                if !taken[c] && pick.is_none_or(|p| gain(c, u) > gain(p, u)) {
                    pick = Some(c);
                }
            }
            let c = pick.unwrap();
            let mut trial = owned[i].clone();
            trial.push(c);
            let new_sr = sum_rate(u, &trial);
            if new_sr <= sr[i] {
                active[i] = false;
                continue;
            }
            let inc = weights[u] * (new_sr - sr[i]);
            if best.is_none_or(|b| inc > b.2) {
                best = Some((i, c, inc, new_sr));
            }
        }
        let Some((i, c, _, new_sr)) = best else { break };
        taken[c] = true;
        owned[i].push(c);
        sr[i] = new_sr;
    }
    ues.into_iter().zip(owned).collect()
}

/// Effective channels with independent complex Gaussian-like entries whose
/// magnitudes span roughly `db_range` around the noise floor.
pub fn random_eff<R: Rng>(
    rng: &mut R,
    num_blocks: usize,
    num_ues: usize,
    prbs_per_block: usize,
    link: &LinkParams,
    db_range: (f64, f64),
) -> EffectiveChannels {
    let scale = link.noise / link.ue_power;
    EffectiveChannels::from_fn(num_blocks, num_ues, prbs_per_block, |_, _, _| {
        let db: f64 = rng.random_range(db_range.0..db_range.1);
        let amp = (scale * 10f64.powf(db / 10.0)).sqrt();
        Complex64::from_polar(amp, rng.random_range(0.0..std::f64::consts::TAU))
    })
}

/// Structural invariants every slot schedule must satisfy. Returns the first
/// violation found.
pub fn check_schedule(s: &SlotSchedule, ctx: &SlotContext) -> Result<(), String> {
    let l_sel = ctx.beam_budget();
    if s.selected_beams.len() > l_sel {
        return Err(format!("{} beams selected, budget {l_sel}", s.selected_beams.len()));
    }
    if s.selected_beams.windows(2).any(|w| w[0] >= w[1]) {
        return Err("selected beams not strictly ascending".into());
    }
    let preferred = ctx.assignment.preferred_beams();
    if s.selected_beams.iter().any(|b| !preferred.contains(b)) {
        return Err("selected beam outside the preferred set".into());
    }
    for (c, users) in s.prb_users.iter().enumerate() {
        if users.len() > ctx.num_rf_chains || users.len() > s.selected_beams.len() {
            return Err(format!("PRB {c} carries {} UEs", users.len()));
        }
        let mut beams: Vec<usize> = users.iter().map(|&u| ctx.assignment.bs_beam[u]).collect();
        if beams.iter().any(|b| !s.selected_beams.contains(b)) {
            return Err(format!("PRB {c} serves a UE whose beam is not selected"));
        }
        beams.sort_unstable();
        if beams.windows(2).any(|w| w[0] == w[1]) {
            return Err(format!("PRB {c} serves two UEs of one beam"));
        }
    }
    let budget = ctx.link.ue_power;
    for (u, prbs) in s.prbs_of_ue().iter().enumerate() {
        let total = s.powers.ue_total(u);
        if total > budget * (1.0 + 1e-9) {
            return Err(format!("UE {u} draws {total} mW over budget {budget}"));
        }
        if !prbs.is_empty() && ((total - budget) / budget).abs() > 1e-9 {
            return Err(format!("UE {u} uses {total} mW instead of its full budget"));
        }
        for c in 0..s.prb_users.len() {
            let p = s.powers.get(c, u);
            if prbs.contains(&c) != (p > 0.0) {
                return Err(format!("UE {u} power {p} on PRB {c} disagrees with z_c"));
            }
        }
    }
    if s.throughput.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
        return Err("negative or non-finite throughput".into());
    }
    Ok(())
}

/// Single-block context over explicit effective channels.
pub fn context<'a>(
    eff: &'a EffectiveChannels,
    assignment: &'a BeamAssignment,
    link: &'a LinkParams,
    num_rf_chains: usize,
) -> SlotContext<'a> {
    SlotContext::new(&desk(assignment.num_ues(), num_rf_chains), eff, assignment, link)
}
