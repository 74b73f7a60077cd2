//! UE placement, path loss and the per-block wideband cluster channel.
//!
//! The channel of UE `u` on block `q` is the `N_u x N_b` matrix
//!
//! ```text
//! G[q][u] = 1/sqrt(N_path) * sum_{d,l} g_{d,l} exp(-j 2 pi tau_{d,l} f_q) a_rx(phi_{d,l}) a_tx(theta_{d,l})^H
//! ```
//!
//! with unit-modulus half-wavelength ULA responses on both sides, so a single
//! path carries the full `N_u N_b` array gain. Path gains themselves sum in
//! power to the large-scale loss. Geometry is
//! drawn once per realization and holds for every slot of the horizon.

use std::f64::consts::{FRAC_PI_2, PI};
use std::io::{BufRead, Write};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Exp, Normal};
use serde::Serialize;

use crate::config::SystemConfig;
use crate::error::{Error, Result};

/// Dense row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                m.data[r * cols + c] = f(r, c);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.data[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[Complex64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn scale(&mut self, s: f64) {
        self.data.iter_mut().for_each(|x| *x *= s);
    }

    /// `self += coef * x y^H`.
    pub fn add_outer(&mut self, coef: Complex64, x: &[Complex64], y: &[Complex64]) {
        debug_assert_eq!(x.len(), self.rows);
        debug_assert_eq!(y.len(), self.cols);
        for (r, xr) in x.iter().enumerate() {
            let cx = coef * xr;
            let row = &mut self.data[r * self.cols..(r + 1) * self.cols];
            for (dst, yc) in row.iter_mut().zip(y) {
                *dst += cx * yc.conj();
            }
        }
    }

    /// `G w`.
    pub fn mul_vec(&self, w: &[Complex64]) -> Vec<Complex64> {
        debug_assert_eq!(w.len(), self.cols);
        (0..self.rows)
            .map(|r| self.row(r).iter().zip(w).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `v^H G w`.
    pub fn bilinear(&self, v: &[Complex64], w: &[Complex64]) -> Complex64 {
        inner(v, &self.mul_vec(w))
    }

    pub fn frobenius_norm_sqr(&self) -> f64 {
        self.data.iter().map(|x| x.norm_sqr()).sum()
    }

    /// Largest singular value, by power iteration on `G^H G`.
    pub fn spectral_norm(&self) -> f64 {
        let mut x = vec![Complex64::new(1.0, 0.0); self.cols];
        let mut sigma = 0.0;
        for _ in 0..500 {
            let y = self.mul_vec(&x);
            let mut z = vec![Complex64::new(0.0, 0.0); self.cols];
            for (r, yr) in y.iter().enumerate() {
                for (c, zc) in z.iter_mut().enumerate() {
                    *zc += self.get(r, c).conj() * yr;
                }
            }
            let norm = z.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            if norm == 0.0 {
                return 0.0;
            }
            let next = norm.sqrt();
            x = z.into_iter().map(|v| v / norm).collect();
            if (next - sigma).abs() <= 1e-14 * next {
                return next;
            }
            sigma = next;
        }
        sigma
    }
}

/// `a^H b`.
pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Unit-norm response of a half-wavelength ULA: element `m` is
/// `exp(j pi m sin(angle)) / sqrt(n)`.
pub fn array_response(angle: f64, n_elements: usize) -> Vec<Complex64> {
    steering_from_sine(angle.sin(), n_elements)
}

pub(crate) fn steering_from_sine(sine: f64, n_elements: usize) -> Vec<Complex64> {
    let scale = 1.0 / (n_elements as f64).sqrt();
    (0..n_elements)
        .map(|m| Complex64::from_polar(scale, PI * m as f64 * sine))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UePlacement {
    pub ue_id: usize,
    pub distance_2d: f64,
    /// Radians in `[0, 2 pi)`.
    pub azimuth: f64,
    /// `(x, y, z)` in meters; the BS mast stands at the origin.
    pub position_3d: [f64; 3],
}

impl UePlacement {
    pub fn distance_3d(&self, bs_height: f64) -> f64 {
        let [x, y, z] = self.position_3d;
        (x * x + y * y + (z - bs_height).powi(2)).sqrt()
    }
}

/// Area-uniform placement over the annulus between the exclusion and cell radii.
pub fn place_ues<R: Rng + ?Sized>(cfg: &SystemConfig, rng: &mut R) -> Vec<UePlacement> {
    let r_min2 = cfg.exclusion_radius_m.powi(2);
    let r_max2 = cfg.cell_radius_m.powi(2);
    (0..cfg.num_ues)
        .map(|ue_id| {
            let r2 = rng.random_range(r_min2..=r_max2);
            let distance_2d = r2.sqrt().clamp(cfg.exclusion_radius_m, cfg.cell_radius_m);
            let azimuth = rng.random_range(0.0..2.0 * PI);
            UePlacement {
                ue_id,
                distance_2d,
                azimuth,
                position_3d: [
                    distance_2d * azimuth.cos(),
                    distance_2d * azimuth.sin(),
                    cfg.ue_height_m,
                ],
            }
        })
        .collect()
}

/// Close-in free-space reference path loss in dB.
pub fn path_loss_db(distance_m: f64, cfg: &SystemConfig) -> Result<f64> {
    if !(distance_m >= cfg.exclusion_radius_m) {
        return Err(Error::InsideExclusionZone {
            distance_m,
            exclusion_m: cfg.exclusion_radius_m,
        });
    }
    let f_ghz = cfg.carrier_freq_hz / 1e9;
    Ok(32.4 + 20.0 * f_ghz.log10() + 10.0 * cfg.path_loss_exponent * distance_m.log10())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathParams {
    pub gain: Complex64,
    /// Delay relative to the cluster group delay (seconds, nonnegative).
    pub relative_delay: f64,
    pub aod: f64,
    pub aoa: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cluster {
    pub group_delay: f64,
    pub mean_aod: f64,
    pub mean_aoa: f64,
    pub paths: Vec<PathParams>,
}

/// Small-scale parameters of one UE, fixed over the horizon.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterGeometry {
    pub clusters: Vec<Cluster>,
}

impl ClusterGeometry {
    pub fn paths_per_cluster(&self) -> usize {
        self.clusters.first().map_or(0, |c| c.paths.len())
    }

    /// Realized sum of `|g|^2` over all paths.
    pub fn total_path_power(&self) -> f64 {
        self.clusters
            .iter()
            .flat_map(|c| &c.paths)
            .map(|p| p.gain.norm_sqr())
            .sum()
    }
}

/// Fraction of the total power carried by each cluster (exponential profile).
pub fn cluster_power_profile(num_clusters: usize, decay_db: f64) -> Vec<f64> {
    let raw: Vec<f64> = (0..num_clusters)
        .map(|d| 10f64.powf(-decay_db * d as f64 / 10.0))
        .collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|p| p / total).collect()
}

fn sample_laplace<R: Rng + ?Sized>(rng: &mut R, std_dev: f64) -> f64 {
    if std_dev == 0.0 {
        return 0.0;
    }
    let scale = std_dev / 2f64.sqrt();
    let u: f64 = rng.random_range(-0.5..0.5);
    -scale * u.signum() * (1.0 - 2.0 * u.abs()).ln()
}

/// Draw the cluster geometry of every UE.
///
/// Each path gain is `CN(0, 10^(-PL/10) pi_d / N_path)` where `pi_d` is the
/// cluster power fraction, so that `sum E|g|^2 = 10^(-PL/10)`.
pub fn generate_geometry<R: Rng + ?Sized>(
    placements: &[UePlacement],
    cfg: &SystemConfig,
    rng: &mut R,
) -> Result<Vec<ClusterGeometry>> {
    let profile = cluster_power_profile(cfg.num_clusters, cfg.cluster_decay_db);
    let spread = cfg.angle_spread_deg.to_radians();
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
    let path_delay = (cfg.mean_path_delay_s > 0.0)
        .then(|| Exp::new(1.0 / cfg.mean_path_delay_s).expect("positive rate"));

    placements
        .iter()
        .map(|ue| {
            let pl = path_loss_db(ue.distance_3d(cfg.bs_height_m), cfg)?;
            let large_scale = 10f64.powf(-pl / 10.0) / cfg.paths_per_cluster as f64;
            let clusters = profile
                .iter()
                .map(|fraction| {
                    let amp = (large_scale * fraction / 2.0).sqrt();
                    let group_delay = rng.random_range(0.0..=cfg.max_group_delay_s);
                    let mean_aod = rng.random_range(-FRAC_PI_2..=FRAC_PI_2);
                    let mean_aoa = rng.random_range(-FRAC_PI_2..=FRAC_PI_2);
                    let paths = (0..cfg.paths_per_cluster)
                        .map(|_| PathParams {
                            gain: Complex64::new(
                                amp * std_normal.sample(rng),
                                amp * std_normal.sample(rng),
                            ),
                            relative_delay: path_delay.map_or(0.0, |d| d.sample(rng)),
                            aod: mean_aod + sample_laplace(rng, spread),
                            aoa: mean_aoa + sample_laplace(rng, spread),
                        })
                        .collect();
                    Cluster {
                        group_delay,
                        mean_aod,
                        mean_aoa,
                        paths,
                    }
                })
                .collect();
            Ok(ClusterGeometry { clusters })
        })
        .collect()
}

/// Center frequency of each block across the occupied band.
pub fn block_frequencies(cfg: &SystemConfig) -> Vec<f64> {
    let bw = cfg.occupied_bandwidth_hz();
    let q_total = cfg.num_blocks as f64;
    (0..cfg.num_blocks)
        .map(|q| cfg.carrier_freq_hz - bw / 2.0 + (q as f64 + 0.5) * bw / q_total)
        .collect()
}

/// Per-block channel matrices `G[q][u]`, each `N_u x N_b`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    matrices: Vec<Vec<CMatrix>>,
}

impl ChannelRealization {
    /// Wrap explicit matrices indexed `[block][ue]`.
    pub fn from_matrices(matrices: Vec<Vec<CMatrix>>) -> Self {
        Self { matrices }
    }

    pub fn num_blocks(&self) -> usize {
        self.matrices.len()
    }

    pub fn num_ues(&self) -> usize {
        self.matrices.first().map_or(0, Vec::len)
    }

    pub fn get(&self, block: usize, ue: usize) -> &CMatrix {
        &self.matrices[block][ue]
    }

    /// Text dump: a header line `Q U N_u N_b`, then for each UE and each block
    /// one line per matrix row holding `re im` pairs.
    pub fn write_text<W: Write>(&self, mut out: W) -> Result<()> {
        let (rows, cols) = self
            .matrices
            .first()
            .and_then(|b| b.first())
            .map_or((0, 0), |m| (m.rows(), m.cols()));
        writeln!(out, "{} {} {} {}", self.num_blocks(), self.num_ues(), rows, cols)?;
        for u in 0..self.num_ues() {
            for q in 0..self.num_blocks() {
                let m = self.get(q, u);
                for r in 0..rows {
                    let line: Vec<String> = m
                        .row(r)
                        .iter()
                        .map(|z| format!("{:e} {:e}", z.re, z.im))
                        .collect();
                    writeln!(out, "{}", line.join(" "))?;
                }
            }
        }
        Ok(())
    }

    pub fn read_text<R: BufRead>(input: R) -> Result<Self> {
        let bad = |msg: &str| Error::ChannelFormat(msg.to_string());
        let mut lines = input.lines();
        let header = lines.next().ok_or_else(|| bad("missing header"))??;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| bad("header must hold four integers")))
            .collect::<Result<_>>()?;
        let [nq, nu, rows, cols] = dims[..] else {
            return Err(bad("header must hold four integers"));
        };
        let mut matrices = vec![vec![CMatrix::zeros(rows, cols); nu]; nq];
        for u in 0..nu {
            for q in 0..nq {
                for r in 0..rows {
                    let line = lines.next().ok_or_else(|| bad("truncated matrix data"))??;
                    let vals: Vec<f64> = line
                        .split_whitespace()
                        .map(|t| t.parse().map_err(|_| bad("non-numeric entry")))
                        .collect::<Result<_>>()?;
                    if vals.len() != 2 * cols {
                        return Err(bad("row has the wrong number of entries"));
                    }
                    for c in 0..cols {
                        matrices[q][u].data[r * cols + c] = Complex64::new(vals[2 * c], vals[2 * c + 1]);
                    }
                }
            }
        }
        Ok(Self { matrices })
    }
}

/// Evaluate the wideband channel of every UE on every block.
pub fn generate_channels(geometry: &[ClusterGeometry], cfg: &SystemConfig) -> ChannelRealization {
    let freqs = block_frequencies(cfg);
    let mut matrices = vec![Vec::with_capacity(geometry.len()); freqs.len()];
    for ue in geometry {
        let per_block = channel_of(ue, &freqs, cfg.ue_antennas, cfg.bs_antennas);
        for (q, m) in per_block.into_iter().enumerate() {
            matrices[q].push(m);
        }
    }
    ChannelRealization { matrices }
}

/// Channel matrices of one UE at the given block frequencies.
pub fn channel_of(
    geometry: &ClusterGeometry,
    block_freqs: &[f64],
    ue_antennas: usize,
    bs_antennas: usize,
) -> Vec<CMatrix> {
    let mut out = vec![CMatrix::zeros(ue_antennas, bs_antennas); block_freqs.len()];
    for cluster in &geometry.clusters {
        for path in &cluster.paths {
            let a_rx = array_response(path.aoa, ue_antennas);
            let a_tx = array_response(path.aod, bs_antennas);
            let tau = cluster.group_delay + path.relative_delay;
            for (m, f) in out.iter_mut().zip(block_freqs) {
                // reduce the phase modulo 2 pi before building the phasor
                let phase = -2.0 * PI * (tau * f).fract();
                m.add_outer(path.gain * Complex64::from_polar(1.0, phase), &a_rx, &a_tx);
            }
        }
    }
    // unit-norm responses times sqrt(N_u N_b) give the unit-modulus ones
    let norm = ((ue_antennas * bs_antennas) as f64 / geometry.paths_per_cluster().max(1) as f64).sqrt();
    out.iter_mut().for_each(|m| m.scale(norm));
    out
}
