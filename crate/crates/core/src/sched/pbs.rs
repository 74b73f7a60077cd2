//! Greedy per-beam user selection with persistence (PBS+).
//!
//! Each round every still-active UE of the beam tentatively takes its `step`
//! best remaining PRBs and its interference-unaware sum rate is recomputed
//! under equal power over owned plus tentative PRBs. A UE whose sum rate does
//! not increase has its stop flag bumped; UEs whose flag exceeds the patience
//! `X` drop out. The UE with the largest weighted increase among those still
//! active is granted its tentative PRBs. With `X = 0` and `step = 1` this is
//! plain PBS: a UE leaves at its first non-increase and the loop ends once no
//! UE improves.
//!
//! Once the loop ends, each UE keeps the shortest prefix of its grants that
//! reaches the best sum rate it held at any point; PRBs past that prefix are
//! returned unallocated.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::beams::EffectiveChannels;
use crate::link::LinkParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PbsParams {
    pub patience: usize,
    pub step: usize,
}

impl PbsParams {
    /// Plain PBS.
    pub const BASELINE: PbsParams = PbsParams { patience: 0, step: 1 };
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerBeamOutcome {
    pub beam: usize,
    /// UE granted each PRB, if any.
    pub prb_owner: Vec<Option<usize>>,
    /// PRBs of each candidate, in grant order.
    pub allocations: BTreeMap<usize, Vec<usize>>,
    /// Interference-unaware EPA sum rate `SR(u)` of each candidate.
    pub sum_rates: BTreeMap<usize, f64>,
    /// `sum_u w_u SR(u)`.
    pub weighted_sum_rate: f64,
    /// Tentative sum-rate evaluations performed.
    pub evaluations: usize,
    /// Accepted grants.
    pub iterations: usize,
}

/// EPA sum rate of UE `u` over `prbs`, ignoring other beams.
pub(crate) fn epa_sum_rate(u: usize, prbs: &[usize], eff: &EffectiveChannels, link: &LinkParams) -> f64 {
    if prbs.is_empty() {
        return 0.0;
    }
    let share = link.ue_power / prbs.len() as f64;
    prbs.iter()
        .map(|&c| link.isolated_rate(eff.signal_gain(c, u), share))
        .sum()
}

/// Up to `step` free PRBs with the largest signal gain for `u`; ties keep the
/// lower PRB index.
fn best_free_prbs(u: usize, free: &[bool], step: usize, eff: &EffectiveChannels) -> Vec<usize> {
    let mut order: Vec<(usize, f64)> = free
        .iter()
        .enumerate()
        .filter(|(_, f)| **f)
        .map(|(c, _)| (c, eff.signal_gain(c, u)))
        .collect();
    order.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    order.into_iter().take(step).map(|(c, _)| c).collect()
}

struct Candidate {
    ue: usize,
    owned: Vec<usize>,
    sum_rate: f64,
    flag: usize,
    /// `(prefix length, sum rate)` after each grant, starting from empty.
    history: Vec<(usize, f64)>,
}

pub fn pbs_plus(
    beam: usize,
    candidates: &[usize],
    weights: &[f64],
    eff: &EffectiveChannels,
    link: &LinkParams,
    params: PbsParams,
) -> PerBeamOutcome {
    assert!(params.step >= 1, "PBS+ step must be at least one PRB");
    let num_prbs = eff.num_prbs();
    let mut free = vec![true; num_prbs];
    let mut free_count = num_prbs;
    let mut ues: Vec<Candidate> = {
        let mut ids = candidates.to_vec();
        ids.sort_unstable();
        ids.dedup();
        ids.into_iter()
            .map(|ue| Candidate {
                ue,
                owned: Vec::new(),
                sum_rate: 0.0,
                flag: 0,
                history: vec![(0, 0.0)],
            })
            .collect()
    };
    let mut evaluations = 0;
    let mut iterations = 0;

    while free_count > 0 && ues.iter().any(|c| c.flag <= params.patience) {
        // (candidate index, weighted increase, tentative PRBs, tentative sum rate)
        let mut winner: Option<(usize, f64, Vec<usize>, f64)> = None;
        for (i, cand) in ues.iter_mut().enumerate() {
            if cand.flag > params.patience {
                continue;
            }
            let tentative = best_free_prbs(cand.ue, &free, params.step, eff);
            let mut trial = cand.owned.clone();
            trial.extend_from_slice(&tentative);
            let sr = epa_sum_rate(cand.ue, &trial, eff, link);
            evaluations += 1;
            if sr <= cand.sum_rate {
                cand.flag += 1;
                if cand.flag > params.patience {
                    continue;
                }
            }
            let gain = weights[cand.ue] * (sr - cand.sum_rate);
            if winner.as_ref().is_none_or(|w| gain > w.1) {
                winner = Some((i, gain, tentative, sr));
            }
        }
        let Some((i, _, tentative, sr)) = winner else {
            break;
        };
        let cand = &mut ues[i];
        for &c in &tentative {
            free[c] = false;
        }
        free_count -= tentative.len();
        cand.owned.extend(tentative);
        cand.sum_rate = sr;
        cand.history.push((cand.owned.len(), sr));
        iterations += 1;
    }

    let mut prb_owner = vec![None; num_prbs];
    let mut allocations = BTreeMap::new();
    let mut sum_rates = BTreeMap::new();
    let mut weighted_sum_rate = 0.0;
    for cand in ues {
        let (keep, best) = cand
            .history
            .iter()
            .copied()
            .fold((0, 0.0), |acc, h| if h.1 > acc.1 { h } else { acc });
        let owned = cand.owned[..keep].to_vec();
        for &c in &owned {
            prb_owner[c] = Some(cand.ue);
        }
        weighted_sum_rate += weights[cand.ue] * best;
        allocations.insert(cand.ue, owned);
        sum_rates.insert(cand.ue, best);
    }

    PerBeamOutcome {
        beam,
        prb_owner,
        allocations,
        sum_rates,
        weighted_sum_rate,
        evaluations,
        iterations,
    }
}
