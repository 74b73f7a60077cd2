//! SINR, the MCS staircase and per-UE power allocation.
//!
//! All quantities here are linear: powers in mW, gains as `|g|^2`.

use crate::beams::EffectiveChannels;
use crate::config::{McsTable, SystemConfig};
use crate::error::{Error, Result};

/// Per-link constants shared by every slot of a realization.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkParams {
    pub mcs: McsTable,
    /// `sigma^2` per PRB, mW.
    pub noise: f64,
    pub prb_bandwidth: f64,
    /// Per-UE budget, mW.
    pub ue_power: f64,
}

impl LinkParams {
    pub fn from_config(cfg: &SystemConfig) -> Result<Self> {
        Ok(Self {
            mcs: cfg.mcs_table()?,
            noise: cfg.noise_power_per_prb(),
            prb_bandwidth: cfg.prb_bandwidth_hz,
            ue_power: cfg.ue_power_mw(),
        })
    }

    pub fn rate(&self, sinr: f64) -> f64 {
        rate(sinr, &self.mcs, self.prb_bandwidth)
    }

    /// Interference-free rate of one PRB with signal gain `gain` and power `power`.
    pub fn isolated_rate(&self, gain: f64, power: f64) -> f64 {
        self.rate(gain * power / self.noise)
    }
}

/// `B_c * s_l` for the largest level with `Gamma_l <= sinr`, zero below `Gamma_1`.
pub fn rate(sinr: f64, mcs: &McsTable, prb_bandwidth: f64) -> f64 {
    prb_bandwidth * mcs.efficiency(sinr)
}

/// Power drawn by each UE on each PRB, `p[c][u]` in mW.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerAllocation {
    num_prbs: usize,
    num_ues: usize,
    p: Vec<f64>,
}

impl PowerAllocation {
    pub fn zeros(num_prbs: usize, num_ues: usize) -> Self {
        Self {
            num_prbs,
            num_ues,
            p: vec![0.0; num_prbs * num_ues],
        }
    }

    pub fn num_prbs(&self) -> usize {
        self.num_prbs
    }

    pub fn num_ues(&self) -> usize {
        self.num_ues
    }

    pub fn get(&self, prb: usize, ue: usize) -> f64 {
        self.p[prb * self.num_ues + ue]
    }

    pub fn set(&mut self, prb: usize, ue: usize, power: f64) {
        self.p[prb * self.num_ues + ue] = power;
    }

    pub fn ue_total(&self, ue: usize) -> f64 {
        (0..self.num_prbs).map(|c| self.get(c, ue)).sum()
    }

    /// Replace UE `ue`'s row with `powers` over `prbs`, zero elsewhere.
    pub fn set_row(&mut self, ue: usize, prbs: &[usize], powers: &[f64]) {
        for c in 0..self.num_prbs {
            self.set(c, ue, 0.0);
        }
        for (&c, &p) in prbs.iter().zip(powers) {
            self.set(c, ue, p);
        }
    }
}

/// SINR of UE `u` on PRB `prb` given the user set `users` of that PRB.
pub fn sinr(
    prb: usize,
    u: usize,
    users: &[usize],
    powers: &PowerAllocation,
    eff: &EffectiveChannels,
    noise: f64,
) -> Result<f64> {
    if !users.contains(&u) {
        return Err(Error::NotScheduled { ue: u, prb });
    }
    let signal = eff.gain(prb, u, u) * powers.get(prb, u);
    let interference: f64 = users
        .iter()
        .filter(|&&n| n != u)
        .map(|&n| eff.gain(prb, u, n) * powers.get(prb, n))
        .sum();
    Ok(signal / (interference + noise))
}

/// Equal power over each UE's PRB set. `prbs_of_ue[u]` lists the PRBs of UE `u`.
pub fn epa(prbs_of_ue: &[Vec<usize>], num_prbs: usize, ue_power: f64) -> PowerAllocation {
    let mut out = PowerAllocation::zeros(num_prbs, prbs_of_ue.len());
    for (u, prbs) in prbs_of_ue.iter().enumerate() {
        if prbs.is_empty() {
            continue;
        }
        let share = ue_power / prbs.len() as f64;
        for &c in prbs {
            out.set(c, u, share);
        }
    }
    out
}

/// Water filling on `sum log(1 + g_c p_c / sigma^2)` with `sum p_c = budget`.
///
/// `gains[i]` is the signal gain of the i-th PRB. PRBs with zero gain get no
/// power; at least one gain must be positive.
pub fn waterfill(gains: &[f64], noise: f64, budget: f64) -> Result<Vec<f64>> {
    let mut floors: Vec<(usize, f64)> = gains
        .iter()
        .enumerate()
        .filter(|(_, g)| **g > 0.0 && g.is_finite())
        .map(|(i, g)| (i, noise / g))
        .collect();
    if floors.is_empty() {
        return Err(Error::NoUsableGain);
    }
    floors.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));

    // Largest active set whose water level stays above every floor in it.
    let mut active = floors.len();
    let mut level = 0.0;
    let mut prefix = 0.0;
    for (k, (_, floor)) in floors.iter().enumerate() {
        prefix += floor;
        let mu = (budget + prefix) / (k + 1) as f64;
        if mu > *floor {
            level = mu;
        } else {
            active = k;
            break;
        }
    }
    let mut out = vec![0.0; gains.len()];
    for &(i, floor) in &floors[..active] {
        out[i] = (level - floor).max(0.0);
    }
    // absorb rounding so the budget is met exactly
    let total: f64 = out.iter().sum();
    if total > 0.0 {
        let fix = budget / total;
        out.iter_mut().for_each(|p| *p *= fix);
    }
    Ok(out)
}

/// `lambda_u`: sum over the PRBs where `u` transmits of the staircase rate at
/// its full-interference SINR.
pub fn slot_throughput(
    u: usize,
    prb_users: &[Vec<usize>],
    powers: &PowerAllocation,
    eff: &EffectiveChannels,
    link: &LinkParams,
) -> f64 {
    prb_users
        .iter()
        .enumerate()
        .filter(|(_, users)| users.contains(&u))
        .map(|(c, users)| {
            let s = sinr(c, u, users, powers, eff, link.noise).expect("u is a member");
            link.rate(s)
        })
        .sum()
}

/// Shannon surrogate `sum_c log2(1 + g_c p_c / sigma^2)`.
pub fn shannon_objective(gains: &[f64], powers: &[f64], noise: f64) -> f64 {
    gains
        .iter()
        .zip(powers)
        .map(|(g, p)| (1.0 + g * p / noise).log2())
        .sum()
}
