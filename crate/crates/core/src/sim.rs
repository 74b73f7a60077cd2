//! Realizations, sweeps and the geometric-mean metric.
//!
//! Realization `r` of a sweep draws all of its randomness from the ChaCha
//! stream `r` of the master seed, so results do not depend on the order in
//! which realizations run.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::beams::{beam_alignment, build_codebook, effective_channels, BeamAssignment, EffectiveChannels, Side};
use crate::channel::{generate_channels, generate_geometry, place_ues, ChannelRealization, UePlacement};
use crate::config::{Solution, SweepAxis, SweepPlan, SystemConfig};
use crate::error::Result;
use crate::link::LinkParams;
use crate::sched::{run_slot, PfState, SlotContext, SlotCounters, SlotSchedule};

/// `(prod_u r_u)^(1/U)`, accumulated in the log domain. Zero if any rate is zero.
pub fn geometric_mean(rates: &[f64]) -> f64 {
    if rates.is_empty() || rates.iter().any(|r| *r <= 0.0) {
        return 0.0;
    }
    (rates.iter().map(|r| r.ln()).sum::<f64>() / rates.len() as f64).exp()
}

/// One drawn cell: placements, channels, beam alignment and effective channels.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub placements: Vec<UePlacement>,
    pub channels: ChannelRealization,
    pub assignment: BeamAssignment,
    pub eff: EffectiveChannels,
    pub link: LinkParams,
}

impl Scenario {
    pub fn generate(cfg: &SystemConfig, realization_index: u64, master_seed: u64) -> Result<Self> {
        cfg.ensure_valid()?;
        let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
        rng.set_stream(realization_index);
        let placements = place_ues(cfg, &mut rng);
        let geometry = generate_geometry(&placements, cfg, &mut rng)?;
        let channels = generate_channels(&geometry, cfg);
        let bs = build_codebook(Side::Bs, cfg.bs_antennas, cfg.bs_codebook_size);
        let ue = build_codebook(Side::Ue, cfg.ue_antennas, cfg.ue_codebook_size);
        let assignment = beam_alignment(&channels, &bs, &ue);
        let eff = effective_channels(&channels, &assignment, &bs, &ue, cfg.prbs_per_block());
        Ok(Self {
            placements,
            channels,
            assignment,
            eff,
            link: LinkParams::from_config(cfg)?,
        })
    }

    pub fn context<'a>(&'a self, cfg: &SystemConfig) -> SlotContext<'a> {
        SlotContext::new(cfg, &self.eff, &self.assignment, &self.link)
    }
}

/// Worst-slot operation counts of one solution over a horizon.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct CounterSummary {
    pub max_pbs_evaluations: usize,
    pub max_pbs_beam_evaluations: usize,
    pub max_pbs_iterations: usize,
    pub max_bsel_comparisons: usize,
    pub max_idd_pair_checks: usize,
    pub max_idd_prb_checks: usize,
    pub total_idd_dropped: usize,
}

impl CounterSummary {
    fn absorb(&mut self, c: &SlotCounters) {
        self.max_pbs_evaluations = self.max_pbs_evaluations.max(c.pbs_evaluations);
        self.max_pbs_beam_evaluations = self.max_pbs_beam_evaluations.max(c.pbs_max_beam_evaluations);
        self.max_pbs_iterations = self.max_pbs_iterations.max(c.pbs_iterations);
        self.max_bsel_comparisons = self.max_bsel_comparisons.max(c.bsel_comparisons);
        self.max_idd_pair_checks = self.max_idd_pair_checks.max(c.idd_pair_checks);
        self.max_idd_prb_checks = self.max_idd_prb_checks.max(c.idd_max_prb_checks);
        self.total_idd_dropped += c.idd_dropped;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolutionOutcome {
    /// `(1/N_T) sum_i lambda_u(i)` per UE.
    pub avg_rates: Vec<f64>,
    pub gm: f64,
    pub counters: CounterSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RealizationResult {
    pub realization_index: u64,
    pub num_preferred_beams: usize,
    pub solutions: BTreeMap<Solution, SolutionOutcome>,
}

impl RealizationResult {
    pub fn gm(&self, s: Solution) -> Option<f64> {
        self.solutions.get(&s).map(|o| o.gm)
    }
}

/// Per-solution operation counts of a realization.
pub fn complexity_counters(result: &RealizationResult) -> BTreeMap<Solution, CounterSummary> {
    result
        .solutions
        .iter()
        .map(|(s, o)| (*s, o.counters))
        .collect()
}

/// Run every solution for `num_slots` slots on `scenario`, each with its own
/// PF state. `observe` sees every slot schedule.
pub fn run_scenario(
    cfg: &SystemConfig,
    scenario: &Scenario,
    solutions: &[Solution],
    mut observe: impl FnMut(&SlotSchedule),
) -> Result<BTreeMap<Solution, SolutionOutcome>> {
    let ctx = scenario.context(cfg);
    let mut out = BTreeMap::new();
    for &solution in solutions {
        let mut pf = PfState::new(cfg.num_ues, cfg.pf_initial_rate, cfg.pf_window);
        let mut totals = vec![0.0; cfg.num_ues];
        let mut counters = CounterSummary::default();
        for slot in 0..cfg.num_slots {
            let schedule = run_slot(solution, slot, &pf, &ctx)?;
            pf.update(&schedule.throughput);
            totals.iter_mut().zip(&schedule.throughput).for_each(|(t, l)| *t += l);
            counters.absorb(&schedule.counters);
            observe(&schedule);
        }
        let avg_rates: Vec<f64> = totals.iter().map(|t| t / cfg.num_slots as f64).collect();
        out.insert(
            solution,
            SolutionOutcome {
                gm: geometric_mean(&avg_rates),
                avg_rates,
                counters,
            },
        );
    }
    Ok(out)
}

pub fn run_realization(
    cfg: &SystemConfig,
    solutions: &[Solution],
    realization_index: u64,
    master_seed: u64,
) -> Result<RealizationResult> {
    run_realization_observed(cfg, solutions, realization_index, master_seed, |_| {})
}

pub fn run_realization_observed(
    cfg: &SystemConfig,
    solutions: &[Solution],
    realization_index: u64,
    master_seed: u64,
    observe: impl FnMut(&SlotSchedule),
) -> Result<RealizationResult> {
    let scenario = Scenario::generate(cfg, realization_index, master_seed)?;
    Ok(RealizationResult {
        realization_index,
        num_preferred_beams: scenario.assignment.num_preferred(),
        solutions: run_scenario(cfg, &scenario, solutions, observe)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub value: usize,
    pub solution: Solution,
    pub mean_gm: f64,
    pub stderr_gm: f64,
    pub realizations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub axis: SweepAxis,
    pub values: Vec<usize>,
    pub seed: u64,
    pub base: SystemConfig,
    pub points: Vec<SweepPoint>,
    /// Raw realization results per axis value, in axis order.
    #[serde(skip)]
    pub realizations: Vec<Vec<RealizationResult>>,
    /// Per-slot trace lines, when requested.
    #[serde(skip)]
    pub trace: Vec<String>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SweepOptions {
    pub parallel: bool,
    pub trace: bool,
}

/// Sample mean and standard error of the mean.
pub fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[derive(Serialize)]
struct TraceRecord<'a> {
    axis: &'a str,
    value: usize,
    realization: u64,
    solution: Solution,
    slot: usize,
    beams: &'a [usize],
    prb_users: &'a [Vec<usize>],
    throughput: &'a [f64],
}

pub fn run_sweep(plan: &SweepPlan, options: SweepOptions) -> Result<SweepResult> {
    plan.validate()?;
    let seed = plan.base.rng_seed;
    let mut points = Vec::new();
    let mut all_results = Vec::new();
    let mut trace = Vec::new();
    for &value in &plan.values {
        let cfg = plan.axis.apply(&plan.base, value);
        let one = |r: usize| -> Result<(RealizationResult, Vec<String>)> {
            let mut lines = Vec::new();
            let result = run_realization_observed(&cfg, &plan.solutions, r as u64, seed, |s| {
                if options.trace {
                    let rec = TraceRecord {
                        axis: plan.axis.as_str(),
                        value,
                        realization: r as u64,
                        solution: s.solution,
                        slot: s.slot,
                        beams: &s.selected_beams,
                        prb_users: &s.prb_users,
                        throughput: &s.throughput,
                    };
                    lines.push(serde_json::to_string(&rec).expect("trace record serializes"));
                }
            })?;
            Ok((result, lines))
        };
        let runs: Vec<(RealizationResult, Vec<String>)> = if options.parallel {
            (0..plan.num_realizations).into_par_iter().map(one).collect::<Result<_>>()?
        } else {
            (0..plan.num_realizations).map(one).collect::<Result<_>>()?
        };
        let mut results = Vec::with_capacity(runs.len());
        for (res, lines) in runs {
            trace.extend(lines);
            results.push(res);
        }
        for &solution in &plan.solutions {
            let gms: Vec<f64> = results.iter().filter_map(|r| r.gm(solution)).collect();
            let (mean_gm, stderr_gm) = mean_and_stderr(&gms);
            points.push(SweepPoint {
                value,
                solution,
                mean_gm,
                stderr_gm,
                realizations: gms.len(),
            });
        }
        all_results.push(results);
    }
    Ok(SweepResult {
        axis: plan.axis,
        values: plan.values.clone(),
        seed,
        base: plan.base.clone(),
        points,
        realizations: all_results,
        trace,
    })
}

pub const CSV_HEADER: &str = "axis,value,solution,mean_gm,stderr_gm,realizations,seed";

impl SweepResult {
    /// `sweep.csv` contents. Floats use Rust's shortest round-trip formatting.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for p in &self.points {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                self.axis.as_str(),
                p.value,
                p.solution,
                p.mean_gm,
                p.stderr_gm,
                p.realizations,
                self.seed
            );
        }
        out
    }

    pub fn point(&self, value: usize, solution: Solution) -> Option<&SweepPoint> {
        self.points
            .iter()
            .find(|p| p.value == value && p.solution == solution)
    }
}
