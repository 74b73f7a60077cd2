//! Analog codebooks, beam alignment and effective channel coefficients.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_complex::Complex64;
use serde::Serialize;

use crate::channel::{inner, steering_from_sine, ChannelRealization};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Side {
    Bs,
    Ue,
}

/// Unit-norm steering beams on a uniform grid in sine space.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    pub side: Side,
    beams: Vec<Vec<Complex64>>,
}

impl Codebook {
    pub fn beams(&self) -> &[Vec<Complex64>] {
        &self.beams
    }

    pub fn beam(&self, index: usize) -> &[Complex64] {
        &self.beams[index]
    }

    pub fn len(&self) -> usize {
        self.beams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beams.is_empty()
    }

    /// Sine of the pointing angle of beam `j`.
    pub fn grid_sine(j: usize, n_beams: usize) -> f64 {
        -1.0 + (2 * j + 1) as f64 / n_beams as f64
    }
}

/// Beam `j` points at `sin(theta_j) = -1 + (2j + 1) / n_beams`.
pub fn build_codebook(side: Side, n_antennas: usize, n_beams: usize) -> Codebook {
    let beams = (0..n_beams)
        .map(|j| steering_from_sine(Codebook::grid_sine(j, n_beams), n_antennas))
        .collect();
    Codebook { side, beams }
}

/// Preferred beam pairs and the beam-to-UE mapping.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BeamAssignment {
    /// `b(u)`: preferred BS beam of each UE.
    pub bs_beam: Vec<usize>,
    /// Preferred UE-side beam of each UE.
    pub ue_beam: Vec<usize>,
    /// `u(b)` for every preferred beam, keyed in ascending beam order.
    users: BTreeMap<usize, Vec<usize>>,
}

impl BeamAssignment {
    pub fn from_preferred(bs_beam: Vec<usize>, ue_beam: Vec<usize>) -> Self {
        let mut users: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (u, &b) in bs_beam.iter().enumerate() {
            users.entry(b).or_default().push(u);
        }
        Self {
            bs_beam,
            ue_beam,
            users,
        }
    }

    pub fn num_ues(&self) -> usize {
        self.bs_beam.len()
    }

    /// `B_p` in ascending index order.
    pub fn preferred_beams(&self) -> Vec<usize> {
        self.users.keys().copied().collect()
    }

    pub fn num_preferred(&self) -> usize {
        self.users.len()
    }

    /// `u(b)`; empty for beams outside `B_p`.
    pub fn users_of(&self, beam: usize) -> &[usize] {
        self.users.get(&beam).map_or(&[], Vec::as_slice)
    }
}

/// Exhaustive search for the pair with the largest block-averaged gain
/// `|v^H G[q][u] w|^2`. Ties keep the lowest (BS, UE) index pair.
pub fn beam_alignment(
    channels: &ChannelRealization,
    bs_codebook: &Codebook,
    ue_codebook: &Codebook,
) -> BeamAssignment {
    let nq = channels.num_blocks();
    let mut bs_beam = Vec::with_capacity(channels.num_ues());
    let mut ue_beam = Vec::with_capacity(channels.num_ues());
    for u in 0..channels.num_ues() {
        let mut best = (f64::NEG_INFINITY, 0, 0);
        for (bi, w) in bs_codebook.beams().iter().enumerate() {
            let projected: Vec<Vec<Complex64>> =
                (0..nq).map(|q| channels.get(q, u).mul_vec(w)).collect();
            for (vi, v) in ue_codebook.beams().iter().enumerate() {
                let gain = projected.iter().map(|gw| inner(v, gw).norm_sqr()).sum::<f64>() / nq as f64;
                if gain > best.0 {
                    best = (gain, bi, vi);
                }
            }
        }
        bs_beam.push(best.1);
        ue_beam.push(best.2);
    }
    BeamAssignment::from_preferred(bs_beam, ue_beam)
}

/// `g_eff[q][n][u] = v_u^H G[q][u] w_{b(n)}`: the signal of UE `u` as seen
/// through the preferred BS beam of UE `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveChannels {
    num_blocks: usize,
    num_ues: usize,
    prbs_per_block: usize,
    data: Vec<Complex64>,
}

impl EffectiveChannels {
    /// Build from an explicit function of `(block, n, u)`.
    pub fn from_fn(
        num_blocks: usize,
        num_ues: usize,
        prbs_per_block: usize,
        mut f: impl FnMut(usize, usize, usize) -> Complex64,
    ) -> Self {
        let mut data = Vec::with_capacity(num_blocks * num_ues * num_ues);
        for q in 0..num_blocks {
            for n in 0..num_ues {
                for u in 0..num_ues {
                    data.push(f(q, n, u));
                }
            }
        }
        Self {
            num_blocks,
            num_ues,
            prbs_per_block,
            data,
        }
    }

    pub fn num_blocks(&self) -> usize {
        self.num_blocks
    }

    pub fn num_ues(&self) -> usize {
        self.num_ues
    }

    pub fn num_prbs(&self) -> usize {
        self.num_blocks * self.prbs_per_block
    }

    pub fn prbs_per_block(&self) -> usize {
        self.prbs_per_block
    }

    pub fn block_of(&self, prb: usize) -> usize {
        prb / self.prbs_per_block
    }

    pub fn get(&self, block: usize, n: usize, u: usize) -> Complex64 {
        self.data[(block * self.num_ues + n) * self.num_ues + u]
    }

    /// `|g_eff|^2` on PRB `prb`.
    pub fn gain(&self, prb: usize, n: usize, u: usize) -> f64 {
        self.get(self.block_of(prb), n, u).norm_sqr()
    }

    /// Signal gain `|g_eff[q(c)][u][u]|^2`.
    pub fn signal_gain(&self, prb: usize, u: usize) -> f64 {
        self.gain(prb, u, u)
    }

    /// Magnitude grid as CSV with columns `block,n,u,magnitude`.
    pub fn magnitude_csv(&self) -> String {
        let mut out = String::from("block,n,u,magnitude\n");
        for q in 0..self.num_blocks {
            for n in 0..self.num_ues {
                for u in 0..self.num_ues {
                    let _ = writeln!(out, "{q},{n},{u},{:e}", self.get(q, n, u).norm());
                }
            }
        }
        out
    }
}

pub fn effective_channels(
    channels: &ChannelRealization,
    assignment: &BeamAssignment,
    bs_codebook: &Codebook,
    ue_codebook: &Codebook,
    prbs_per_block: usize,
) -> EffectiveChannels {
    let nu = channels.num_ues();
    // Cache G[q][u] w_b for each distinct preferred beam.
    let mut projections: BTreeMap<(usize, usize, usize), Complex64> = BTreeMap::new();
    for q in 0..channels.num_blocks() {
        for u in 0..nu {
            let v = ue_codebook.beam(assignment.ue_beam[u]);
            for b in assignment.preferred_beams() {
                let gw = channels.get(q, u).mul_vec(bs_codebook.beam(b));
                projections.insert((q, b, u), inner(v, &gw));
            }
        }
    }
    EffectiveChannels::from_fn(channels.num_blocks(), nu, prbs_per_block, |q, n, u| {
        projections[&(q, assignment.bs_beam[n], u)]
    })
}
