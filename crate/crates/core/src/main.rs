use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use serde_json::json;

use hbf_rrm::config::{Preset, Solution, SweepPlan, SystemConfig};
use hbf_rrm::sim::{run_sweep, SweepOptions};

#[derive(Parser)]
#[command(name = "hbf-rrm", version, about = "Uplink hybrid-beamforming RRM simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a K or U sweep and write sweep.csv and run_meta.json.
    Run {
        /// Flat TOML config; missing keys come from its `preset` (desk by default).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Sweep axis and values, e.g. `K=1,2,4,8`.
        #[arg(long)]
        sweep: String,
        #[arg(long, default_value = "B,S0,S1,S2,S2WF", value_delimiter = ',')]
        solutions: Vec<String>,
        #[arg(long, default_value_t = 20)]
        realizations: usize,
        /// Overrides `rng_seed` from the config.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Also write per-slot schedules to trace.jsonl.
        #[arg(long)]
        trace: bool,
        /// Run realizations on one thread.
        #[arg(long)]
        serial: bool,
    },
    /// Print a preset configuration as TOML.
    ShowConfig {
        #[arg(long, default_value = "desk")]
        preset: String,
    },
}

fn unix_seconds() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs())
}

fn run(cli: Cli) -> Result<(), Box<dyn std::error::Error>> {
    match cli.command {
        Command::ShowConfig { preset } => {
            let preset: Preset = preset.parse()?;
            print!("{}", preset.config().to_toml_string());
        }
        Command::Run {
            config,
            sweep,
            solutions,
            realizations,
            seed,
            out,
            trace,
            serial,
        } => {
            let mut base = match &config {
                Some(path) => SystemConfig::from_toml_str(&fs::read_to_string(path)?)?,
                None => SystemConfig::default(),
            };
            if let Some(seed) = seed {
                base.rng_seed = seed;
            }
            let (axis, values) = SweepPlan::parse_axis(&sweep)?;
            let solutions = solutions
                .iter()
                .map(|s| s.parse::<Solution>())
                .collect::<Result<Vec<_>, _>>()?;
            let plan = SweepPlan {
                axis,
                values,
                num_realizations: realizations,
                base,
                solutions,
            };
            let started = unix_seconds();
            let result = run_sweep(&plan, SweepOptions { parallel: !serial, trace })?;
            let finished = unix_seconds();

            fs::create_dir_all(&out)?;
            fs::write(out.join("sweep.csv"), result.to_csv())?;
            let meta = json!({
                "tool": env!("CARGO_PKG_NAME"),
                "version": env!("CARGO_PKG_VERSION"),
                "started_unix": started,
                "finished_unix": finished,
                "axis": plan.axis.as_str(),
                "values": plan.values,
                "solutions": plan.solutions,
                "realizations": plan.num_realizations,
                "seed": plan.base.rng_seed,
                "config": plan.base,
            });
            fs::write(out.join("run_meta.json"), serde_json::to_string_pretty(&meta)?)?;
            if trace {
                let mut text = result.trace.join("\n");
                text.push('\n');
                fs::write(out.join("trace.jsonl"), text)?;
            }
            eprintln!("wrote {}", out.join("sweep.csv").display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
