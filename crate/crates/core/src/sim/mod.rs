//! Experiment orchestration: trajectories, replays, Monte Carlo batches and timing.

mod montecarlo;
mod plan;
mod replay;
mod report;
mod scenario;
mod timing;

pub use montecarlo::{monte_carlo, McSummary};
pub use plan::{plan_trajectory, TrajectoryPlan, TrajectoryType, PASS_DISTANCE};
pub use replay::{replay, ReplayConfig, RunResult, StepRecord, DIVERGENCE_THRESHOLD};
pub use report::{histogram_bins, histogram_svg, mc_runs_csv, run_csv};
pub use scenario::{single_crater_scene, Scenario, ScenarioSpec};
pub use timing::{timing_harness, TimingReport, TimingRow};

/// Independent 64-bit seed for sub-stream `stream` of a run seed (SplitMix64 finalizer).
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
