use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{replay, ReplayConfig, RunResult, TrajectoryPlan, TrajectoryType};
use crate::map::{CraterMap, DemRaster};
use crate::{Error, Result};

/// Aggregate final-error statistics of a batch of replays.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McSummary {
    pub traj_type: TrajectoryType,
    pub drift_p: f64,
    pub path_length_m: f64,
    pub runs: usize,
    pub avg_error_m: f64,
    /// Population standard deviation of the final errors.
    pub stdev_error_m: f64,
    pub max_error_m: f64,
    pub median_error_m: f64,
    pub frac_gt_5m: f64,
    pub frac_diverged: f64,
}

impl McSummary {
    pub fn from_runs(plan: &TrajectoryPlan, drift_p: f64, runs: &[RunResult]) -> Result<Self> {
        if runs.is_empty() {
            return Err(Error::Config("a summary needs at least one run".into()));
        }
        let errs: Vec<f64> = runs.iter().map(|r| r.final_error).collect();
        let n = errs.len() as f64;
        let avg = errs.iter().sum::<f64>() / n;
        let var = errs.iter().map(|e| (e - avg).powi(2)).sum::<f64>() / n;
        let mut sorted = errs.clone();
        sorted.sort_by(f64::total_cmp);
        let mid = sorted.len() / 2;
        let median = if sorted.len() % 2 == 1 {
            sorted[mid]
        } else {
            0.5 * (sorted[mid - 1] + sorted[mid])
        };
        Ok(Self {
            traj_type: plan.traj_type,
            drift_p,
            path_length_m: plan.length(),
            runs: runs.len(),
            avg_error_m: avg,
            stdev_error_m: var.sqrt(),
            max_error_m: *sorted.last().unwrap(),
            median_error_m: median,
            frac_gt_5m: errs.iter().filter(|&&e| e > 5.0).count() as f64 / n,
            frac_diverged: runs.iter().filter(|r| r.diverged).count() as f64 / n,
        })
    }
}

/// `n_runs` independent replays with seeds `base_seed, base_seed + 1, ...`. Each seed draws its
/// own bias direction. Runs execute in parallel; results are returned in seed order.
pub fn monte_carlo(
    plan: &TrajectoryPlan,
    map: &CraterMap,
    dem: &DemRaster,
    config: &ReplayConfig,
    drift_p: f64,
    n_runs: usize,
    base_seed: u64,
) -> Result<(McSummary, Vec<RunResult>)> {
    if n_runs == 0 {
        return Err(Error::Config("n_runs must be at least 1".into()));
    }
    let runs = (0..n_runs as u64)
        .into_par_iter()
        .map(|i| replay(plan, map, dem, config, drift_p, base_seed.wrapping_add(i)))
        .collect::<Result<Vec<_>>>()?;
    let summary = McSummary::from_runs(plan, drift_p, &runs)?;
    Ok((summary, runs))
}
