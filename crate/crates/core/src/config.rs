//! System parameters, the MCS table and sweep plans.
//!
//! A [`SystemConfig`] is immutable once built. It can be loaded from a flat
//! TOML document whose keys match the field names; keys left out fall back to
//! the preset named by the optional `preset` key (`"desk"` unless specified).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// 3GPP TS 38.214 Table 5.2.2.1-3 (CQI table 2) spectral efficiencies in bps/Hz.
pub const CQI_TABLE_EFFICIENCIES: [f64; 15] = [
    0.1523, 0.3770, 0.8770, 1.4766, 1.9141, 2.4063, 2.7305, 3.3223, 3.9023, 4.5234, 5.1152,
    5.5547, 6.2266, 6.9141, 7.4063,
];

/// Convert dBm to milliwatts.
pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

/// Convert a power ratio in dB to linear scale.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Convert milliwatts to dBm.
pub fn mw_to_dbm(mw: f64) -> f64 {
    10.0 * mw.log10()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub num_ues: usize,
    pub num_rf_chains: usize,
    pub num_subchannels: usize,
    pub num_blocks: usize,
    pub num_slots: usize,
    pub bs_antennas: usize,
    pub ue_antennas: usize,
    pub bs_codebook_size: usize,
    pub ue_codebook_size: usize,
    /// Bandwidth of one PRB in Hz.
    pub prb_bandwidth_hz: f64,
    pub carrier_freq_hz: f64,
    /// Nominal channel bandwidth in Hz. The occupied bandwidth is
    /// `num_subchannels * prb_bandwidth_hz` and must fit inside it.
    pub channel_bandwidth_hz: f64,
    /// Per-UE per-slot power budget.
    pub ue_power_dbm: f64,
    pub noise_psd_dbm_hz: f64,
    pub cell_radius_m: f64,
    pub exclusion_radius_m: f64,
    pub bs_height_m: f64,
    pub ue_height_m: f64,
    pub pf_window: usize,
    /// Initial PF average rate, in the same unit as the slot throughput (bps).
    pub pf_initial_rate: f64,
    pub pbs_plus_patience: usize,
    /// PRBs granted per accepted PBS+ iteration.
    pub pbs_plus_step: usize,
    /// Interference-to-signal ratio above which IDD drops a UE (linear).
    pub idd_threshold: f64,
    pub rng_seed: u64,

    // Small-scale channel parameters.
    pub num_clusters: usize,
    pub paths_per_cluster: usize,
    pub path_loss_exponent: f64,
    /// Power decay between consecutive clusters in dB.
    pub cluster_decay_db: f64,
    /// Standard deviation of the per-path angular offset around the cluster mean.
    pub angle_spread_deg: f64,
    /// Cluster group delays are uniform in `[0, max_group_delay_s]`.
    pub max_group_delay_s: f64,
    /// Mean of the exponential intra-cluster relative delay.
    pub mean_path_delay_s: f64,

    /// MCS spectral efficiencies in bps/Hz, strictly increasing.
    pub mcs_efficiencies: Vec<f64>,
    /// Explicit SINR thresholds in dB. When empty, thresholds follow
    /// `(2^s - 1) * 10^(margin/10)`.
    pub mcs_thresholds_db: Vec<f64>,
    pub mcs_margin_db: f64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        desk_config()
    }
}

/// The full-scale cell: 128/16 antennas, 132 PRBs in 22 blocks, 100 slots.
pub fn full_config() -> SystemConfig {
    SystemConfig {
        num_ues: 10,
        num_rf_chains: 6,
        num_subchannels: 132,
        num_blocks: 22,
        num_slots: 100,
        bs_antennas: 128,
        ue_antennas: 16,
        bs_codebook_size: 32,
        ue_codebook_size: 4,
        prb_bandwidth_hz: 720e3,
        carrier_freq_hz: 28e9,
        channel_bandwidth_hz: 100e6,
        ue_power_dbm: 7.0,
        noise_psd_dbm_hz: -174.0,
        cell_radius_m: 75.0,
        exclusion_radius_m: 6.0,
        bs_height_m: 10.0,
        ue_height_m: 1.5,
        pf_window: 10,
        pf_initial_rate: 2.0,
        pbs_plus_patience: 6,
        pbs_plus_step: 6,
        idd_threshold: 1.0,
        rng_seed: 1,
        num_clusters: 5,
        paths_per_cluster: 10,
        path_loss_exponent: 2.0,
        cluster_decay_db: 3.0,
        angle_spread_deg: 5.0,
        max_group_delay_s: 100e-9,
        mean_path_delay_s: 5e-9,
        mcs_efficiencies: CQI_TABLE_EFFICIENCIES.to_vec(),
        mcs_thresholds_db: Vec::new(),
        mcs_margin_db: 2.0,
    }
}

/// Reduced profile for quick runs and CI: 32/8 antennas, 24 PRBs in 4 blocks,
/// 50 slots. Six PRBs per block, as in the full profile.
pub fn desk_config() -> SystemConfig {
    SystemConfig {
        num_subchannels: 24,
        num_blocks: 4,
        num_slots: 50,
        bs_antennas: 32,
        ue_antennas: 8,
        channel_bandwidth_hz: 20e6,
        ..full_config()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Desk,
    Full,
}

impl Preset {
    pub fn config(self) -> SystemConfig {
        match self {
            Preset::Desk => desk_config(),
            Preset::Full => full_config(),
        }
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "desk" => Ok(Preset::Desk),
            "full" => Ok(Preset::Full),
            other => Err(Error::ConfigParse(format!("unknown preset `{other}`"))),
        }
    }
}

/// One violated configuration invariant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub fields: Vec<&'static str>,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} [{}]", self.message, self.fields.join(", "))
    }
}

impl SystemConfig {
    /// Parse a flat TOML document on top of the preset it names.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let mut overrides: toml::Table =
            text.parse().map_err(|e: toml::de::Error| Error::ConfigParse(e.to_string()))?;
        let preset = match overrides.remove("preset") {
            Some(toml::Value::String(name)) => name.parse()?,
            Some(other) => {
                return Err(Error::ConfigParse(format!(
                    "`preset` must be a string, got {other}"
                )))
            }
            None => Preset::Desk,
        };
        let mut merged = toml::Table::try_from(preset.config())
            .map_err(|e| Error::ConfigParse(e.to_string()))?;
        for (key, value) in overrides {
            if !merged.contains_key(&key) {
                return Err(Error::ConfigParse(format!("unknown key `{key}`")));
            }
            // Allow integer literals for float fields.
            let value = match (&merged[&key], value) {
                (toml::Value::Float(_), toml::Value::Integer(i)) => toml::Value::Float(i as f64),
                (_, v) => v,
            };
            merged.insert(key, value);
        }
        merged
            .try_into()
            .map_err(|e: toml::de::Error| Error::ConfigParse(e.to_string()))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("SystemConfig always serializes")
    }

    /// Every violated invariant. Empty when the config is usable.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut check = |ok: bool, fields: &[&'static str], message: &str| {
            if !ok {
                out.push(Violation {
                    fields: fields.to_vec(),
                    message: message.to_string(),
                });
            }
        };
        let positive = [
            (self.num_ues, "num_ues"),
            (self.num_rf_chains, "num_rf_chains"),
            (self.num_subchannels, "num_subchannels"),
            (self.num_blocks, "num_blocks"),
            (self.num_slots, "num_slots"),
            (self.bs_antennas, "bs_antennas"),
            (self.ue_antennas, "ue_antennas"),
            (self.bs_codebook_size, "bs_codebook_size"),
            (self.ue_codebook_size, "ue_codebook_size"),
            (self.pf_window, "pf_window"),
            (self.pbs_plus_step, "pbs_plus_step"),
            (self.num_clusters, "num_clusters"),
            (self.paths_per_cluster, "paths_per_cluster"),
        ];
        for (value, name) in positive {
            check(value >= 1, &[name], "must be at least 1");
        }
        check(
            self.num_blocks == 0 || self.num_subchannels % self.num_blocks == 0,
            &["num_subchannels", "num_blocks"],
            "C mod Q != 0",
        );
        check(
            self.exclusion_radius_m < self.cell_radius_m,
            &["exclusion_radius_m", "cell_radius_m"],
            "exclusion radius must be smaller than cell radius",
        );
        check(
            self.exclusion_radius_m >= 0.0,
            &["exclusion_radius_m"],
            "must be nonnegative",
        );
        check(
            self.bs_antennas >= self.num_rf_chains,
            &["bs_antennas", "num_rf_chains"],
            "need at least as many BS antennas as RF chains",
        );
        check(
            self.occupied_bandwidth_hz() <= self.channel_bandwidth_hz * (1.0 + 1e-12),
            &["num_subchannels", "prb_bandwidth_hz", "channel_bandwidth_hz"],
            "C * B_c exceeds the channel bandwidth",
        );
        for (value, name) in [
            (self.prb_bandwidth_hz, "prb_bandwidth_hz"),
            (self.carrier_freq_hz, "carrier_freq_hz"),
            (self.pf_initial_rate, "pf_initial_rate"),
            (self.idd_threshold, "idd_threshold"),
            (self.path_loss_exponent, "path_loss_exponent"),
        ] {
            check(value > 0.0 && value.is_finite(), &[name], "must be positive");
        }
        check(
            self.max_group_delay_s >= 0.0
                && self.mean_path_delay_s >= 0.0
                && self.angle_spread_deg >= 0.0,
            &["max_group_delay_s", "mean_path_delay_s", "angle_spread_deg"],
            "must be nonnegative",
        );
        if let Err(e) = self.mcs_table() {
            check(
                false,
                &["mcs_efficiencies", "mcs_thresholds_db", "mcs_margin_db"],
                &e.to_string(),
            );
        }
        out
    }

    pub fn ensure_valid(&self) -> Result<()> {
        let v = self.validate();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(v))
        }
    }

    pub fn occupied_bandwidth_hz(&self) -> f64 {
        self.num_subchannels as f64 * self.prb_bandwidth_hz
    }

    pub fn prbs_per_block(&self) -> usize {
        self.num_subchannels / self.num_blocks
    }

    /// Block index (0-based) holding PRB `prb` (0-based).
    pub fn block_of(&self, prb: usize) -> usize {
        prb / self.prbs_per_block()
    }

    pub fn ue_power_mw(&self) -> f64 {
        dbm_to_mw(self.ue_power_dbm)
    }

    /// Noise power on one PRB in mW.
    pub fn noise_power_per_prb(&self) -> f64 {
        dbm_to_mw(self.noise_psd_dbm_hz + 10.0 * self.prb_bandwidth_hz.log10())
    }

    pub fn mcs_table(&self) -> Result<McsTable> {
        let thresholds: Vec<f64> = if self.mcs_thresholds_db.is_empty() {
            let margin = db_to_linear(self.mcs_margin_db);
            self.mcs_efficiencies
                .iter()
                .map(|s| (2f64.powf(*s) - 1.0) * margin)
                .collect()
        } else {
            if self.mcs_thresholds_db.len() != self.mcs_efficiencies.len() {
                return Err(Error::ConfigParse(
                    "mcs_thresholds_db and mcs_efficiencies differ in length".into(),
                ));
            }
            self.mcs_thresholds_db.iter().map(|db| db_to_linear(*db)).collect()
        };
        McsTable::new(thresholds.into_iter().zip(self.mcs_efficiencies.iter().copied()).collect())
    }
}

/// Staircase SINR-to-efficiency map. Thresholds are linear SINR.
#[derive(Debug, Clone, PartialEq)]
pub struct McsTable {
    thresholds: Vec<f64>,
    efficiencies: Vec<f64>,
}

impl McsTable {
    /// Build from `(threshold, spectral efficiency)` pairs.
    pub fn new(entries: Vec<(f64, f64)>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::ConfigParse("MCS table is empty".into()));
        }
        let (thresholds, efficiencies): (Vec<f64>, Vec<f64>) = entries.into_iter().unzip();
        if !(thresholds[0] > 0.0) {
            return Err(Error::ConfigParse("first MCS threshold must be positive".into()));
        }
        let increasing = |v: &[f64]| v.windows(2).all(|w| w[0] < w[1]) && v.iter().all(|x| x.is_finite());
        if !increasing(&thresholds) || !increasing(&efficiencies) {
            return Err(Error::ConfigParse(
                "MCS thresholds and efficiencies must be strictly increasing".into(),
            ));
        }
        Ok(Self {
            thresholds,
            efficiencies,
        })
    }

    pub fn len(&self) -> usize {
        self.thresholds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thresholds.is_empty()
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn efficiencies(&self) -> &[f64] {
        &self.efficiencies
    }

    /// Spectral efficiency of the highest level whose threshold is at most `sinr`.
    pub fn efficiency(&self, sinr: f64) -> f64 {
        // thresholds are sorted; count how many are <= sinr
        let level = self.thresholds.partition_point(|t| *t <= sinr);
        if level == 0 {
            0.0
        } else {
            self.efficiencies[level - 1]
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Solution {
    B,
    S0,
    S1,
    S2,
    S2WF,
}

impl Solution {
    pub const ALL: [Solution; 5] = [
        Solution::B,
        Solution::S0,
        Solution::S1,
        Solution::S2,
        Solution::S2WF,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Solution::B => "B",
            Solution::S0 => "S0",
            Solution::S1 => "S1",
            Solution::S2 => "S2",
            Solution::S2WF => "S2WF",
        }
    }
}

impl fmt::Display for Solution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Solution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().replace(['-', '_'], "").as_str() {
            "B" => Ok(Solution::B),
            "S0" => Ok(Solution::S0),
            "S1" => Ok(Solution::S1),
            "S2" => Ok(Solution::S2),
            "S2WF" => Ok(Solution::S2WF),
            _ => Err(Error::UnknownSolution(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepAxis {
    K,
    U,
}

impl SweepAxis {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepAxis::K => "K",
            SweepAxis::U => "U",
        }
    }

    /// Copy of `base` with the swept parameter set to `value`.
    pub fn apply(self, base: &SystemConfig, value: usize) -> SystemConfig {
        let mut cfg = base.clone();
        match self {
            SweepAxis::K => cfg.num_rf_chains = value,
            SweepAxis::U => cfg.num_ues = value,
        }
        cfg
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "K" | "k" => Ok(SweepAxis::K),
            "U" | "u" => Ok(SweepAxis::U),
            other => Err(Error::InvalidPlan(format!("unknown sweep axis `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPlan {
    pub axis: SweepAxis,
    pub values: Vec<usize>,
    pub num_realizations: usize,
    pub base: SystemConfig,
    pub solutions: Vec<Solution>,
}

impl SweepPlan {
    /// Parse `K=1,2,4` style sweep arguments.
    pub fn parse_axis(arg: &str) -> Result<(SweepAxis, Vec<usize>)> {
        let (axis, values) = arg
            .split_once('=')
            .ok_or_else(|| Error::InvalidPlan(format!("expected <axis>=<v1,v2,...>, got `{arg}`")))?;
        let axis: SweepAxis = axis.parse()?;
        let values = values
            .split(',')
            .map(|v| {
                v.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::InvalidPlan(format!("bad sweep value `{v}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((axis, values))
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::InvalidPlan("no axis values".into()));
        }
        if self.values.contains(&0) {
            return Err(Error::InvalidPlan("axis values must be positive".into()));
        }
        if self.num_realizations == 0 {
            return Err(Error::InvalidPlan("need at least one realization".into()));
        }
        if self.solutions.is_empty() {
            return Err(Error::InvalidPlan("no solutions selected".into()));
        }
        for &v in &self.values {
            self.axis.apply(&self.base, v).ensure_valid()?;
        }
        Ok(())
    }
}
