//! `craterloc` command-line tool: generate fields, plan routes, replay, run Monte Carlo batches,
//! run the detector on one pose and time the pipeline.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use craterloc::sim::TrajectoryType;

/// Failure classes mapped to exit codes: usage/config errors exit 2, everything else 1.
#[derive(Debug)]
pub enum CliError {
    Usage(anyhow::Error),
    Runtime(anyhow::Error),
}

impl From<craterloc::Error> for CliError {
    fn from(e: craterloc::Error) -> Self {
        match e {
            craterloc::Error::Config(_) => CliError::Usage(e.into()),
            other => CliError::Runtime(other.into()),
        }
    }
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Runtime(e)
    }
}

#[derive(Parser)]
#[command(name = "craterloc", version, about = "Crater-landmark localization simulator")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed (and CRATERLOC_SEED).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the configured output directory.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a crater map (JSON) and DEM (ESRI ASCII grid).
    Gen {
        /// Side of a randomly populated square field (m); the configured route scenario when omitted.
        #[arg(long, value_parser = positive_f64, allow_negative_numbers = true)]
        extent: Option<f64>,
    },
    /// Plan a trajectory and write its waypoints.
    Traj {
        #[arg(long = "type")]
        traj_type: Option<TrajectoryType>,
    },
    /// Replay one trajectory and write the per-step error CSV.
    Run {
        #[arg(long = "traj")]
        traj_type: Option<TrajectoryType>,
        #[arg(long, value_parser = non_negative_f64)]
        drift: Option<f64>,
    },
    /// Monte Carlo batch: summary JSON, per-run CSV and final-error histogram per drift rate.
    Mc {
        #[arg(long = "traj")]
        traj_type: Option<TrajectoryType>,
        /// One or more drift rates, comma separated (e.g. 0.01,0.02,0.03).
        #[arg(long, value_delimiter = ',', value_parser = non_negative_f64)]
        drift: Vec<f64>,
        #[arg(long)]
        runs: Option<usize>,
    },
    /// Render one range image, detect crater rims and score them.
    Detect {
        /// Distance from the near rim of a lone landmark crater (m).
        #[arg(long, default_value_t = 10.0, value_parser = positive_f64)]
        range: f64,
        /// Lone-crater diameter (m).
        #[arg(long, default_value_t = 15.0, value_parser = positive_f64)]
        diameter: f64,
        /// Camera pose `x,y,heading_deg` on the configured map instead of the lone crater.
        #[arg(long, value_parser = parse_pose, allow_hyphen_values = true)]
        pose: Option<(f64, f64, f64)>,
        /// Sweep rim ranges `start..end` (inclusive) instead of a single range.
        #[arg(long)]
        sweep_range: Option<String>,
        #[arg(long, default_value_t = 1.0, value_parser = positive_f64)]
        step: f64,
        /// Render without range noise or random holes.
        #[arg(long)]
        zero_noise: bool,
        /// Also write the refined range image (RNGI + JSON sidecar).
        #[arg(long)]
        dump_range: bool,
    },
    /// Time detection and filter steps for several particle counts.
    Bench {
        #[arg(long, value_delimiter = ',', default_values_t = [50usize, 100, 200])]
        particles: Vec<usize>,
        #[arg(long, default_value_t = 5)]
        repeats: usize,
    },
}

fn positive_f64(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        Ok(v) => Err(format!("must be positive, got {v}")),
        Err(e) => Err(e.to_string()),
    }
}

fn non_negative_f64(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v >= 0.0 && v.is_finite() => Ok(v),
        Ok(v) => Err(format!("must be non-negative, got {v}")),
        Err(e) => Err(e.to_string()),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = config::RunConfig::load(cli.common.config.as_deref())?;
    if let Ok(s) = std::env::var("CRATERLOC_SEED") {
        cfg.seed = s
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(anyhow::anyhow!("CRATERLOC_SEED must be an unsigned integer, got {s:?}")))?;
    }
    if let Some(seed) = cli.common.seed {
        cfg.seed = seed;
    }
    if let Some(dir) = cli.common.out_dir {
        cfg.output_dir = dir;
    }
    match cli.command {
        Command::Gen { extent } => commands::gen(&cfg, extent),
        Command::Traj { traj_type } => {
            if let Some(t) = traj_type {
                cfg.trajectory.traj_type = t;
            }
            commands::traj(&cfg)
        }
        Command::Run { traj_type, drift } => {
            if let Some(t) = traj_type {
                cfg.trajectory.traj_type = t;
            }
            if let Some(p) = drift {
                cfg.drift_p = p;
            }
            commands::run(&cfg)
        }
        Command::Mc { traj_type, drift, runs } => {
            if let Some(t) = traj_type {
                cfg.trajectory.traj_type = t;
            }
            if !drift.is_empty() {
                cfg.drift_sweep = drift;
            }
            if let Some(n) = runs {
                cfg.n_runs = n;
            }
            commands::mc(&cfg)
        }
        Command::Detect {
            range,
            diameter,
            pose,
            sweep_range,
            step,
            zero_noise,
            dump_range,
        } => {
            let opts = commands::DetectOptions {
                range,
                diameter,
                pose,
                sweep: sweep_range.as_deref().map(parse_range).transpose()?,
                step,
                zero_noise,
                dump_range,
            };
            commands::detect(&cfg, &opts)
        }
        Command::Bench { particles, repeats } => commands::bench(&cfg, &particles, repeats),
    }
}

fn parse_pose(s: &str) -> Result<(f64, f64, f64), String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}")))
        .collect::<Result<_, _>>()?;
    match v[..] {
        [x, y, h] if v.iter().all(|c| c.is_finite()) => Ok((x, y, h)),
        _ => Err(format!("expected x,y,heading_deg, got {s:?}")),
    }
}

fn parse_range(s: &str) -> Result<(f64, f64), CliError> {
    let bad = || CliError::Usage(anyhow::anyhow!("--sweep-range expects START..END with 0 < START <= END, got {s:?}"));
    let (a, b) = s.split_once("..").ok_or_else(bad)?;
    let a: f64 = a.trim().parse().map_err(|_| bad())?;
    let b: f64 = b.trim().parse().map_err(|_| bad())?;
    if a > 0.0 && a <= b {
        Ok((a, b))
    } else {
        Err(bad())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
