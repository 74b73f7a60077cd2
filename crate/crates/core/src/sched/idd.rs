//! Interference down dropping on one PRB.

use serde::Serialize;

use crate::beams::EffectiveChannels;
use crate::error::{Error, Result};
use crate::link::PowerAllocation;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IddOutcome {
    pub kept: Vec<usize>,
    pub dropped: Vec<usize>,
    /// Ordered pairs `(n, u)` examined.
    pub pair_checks: usize,
}

/// `I_{c,n,u} = |g[n][u]|^2 p_u / (|g[n][n]|^2 p_n)`: interference caused at
/// `n` by `u`, relative to the signal of `n`.
pub fn interference_ratio(
    prb: usize,
    n: usize,
    u: usize,
    powers: &PowerAllocation,
    eff: &EffectiveChannels,
) -> f64 {
    if n == u {
        return 0.0;
    }
    let interference = eff.gain(prb, n, u) * powers.get(prb, u);
    let signal = eff.gain(prb, n, n) * powers.get(prb, n);
    if interference == 0.0 {
        0.0
    } else {
        interference / signal
    }
}

/// Record every UE whose interference at some other member exceeds
/// `threshold` times that member's signal, then drop all recorded UEs at once.
pub fn idd(
    prb: usize,
    users: &[usize],
    powers: &PowerAllocation,
    eff: &EffectiveChannels,
    threshold: f64,
) -> Result<IddOutcome> {
    if let Some(&ue) = users.iter().find(|&&n| powers.get(prb, n) <= 0.0) {
        return Err(Error::ZeroPower { ue, prb });
    }
    let mut pair_checks = 0;
    let mut kept = Vec::with_capacity(users.len());
    let mut dropped = Vec::new();
    for &u in users {
        let mut exceeds = false;
        for &n in users.iter().filter(|&&n| n != u) {
            pair_checks += 1;
            exceeds |= interference_ratio(prb, n, u, powers, eff) > threshold;
        }
        if exceeds {
            dropped.push(u);
        } else {
            kept.push(u);
        }
    }
    Ok(IddOutcome {
        kept,
        dropped,
        pair_checks,
    })
}
