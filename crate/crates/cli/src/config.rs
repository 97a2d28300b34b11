//! TOML run configuration shared by every subcommand.

use craterloc::camera::{CameraModel, SensingNoiseModel};
use craterloc::detect::DetectionParams;
use craterloc::filter::FilterConfig;
use craterloc::sim::{ReplayConfig, ScenarioSpec, TrajectoryType};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

use crate::CliError;

/// Camera mount and sensor, in the units people write by hand.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CameraSpec {
    pub width: usize,
    pub height: usize,
    pub hfov_deg: f64,
    pub height_m: f64,
    pub pitch_deg: f64,
    pub baseline_m: f64,
}

impl Default for CameraSpec {
    fn default() -> Self {
        Self::from_model(&ReplayConfig::half_resolution().camera)
    }
}

impl CameraSpec {
    fn from_model(c: &CameraModel) -> Self {
        Self {
            width: c.image_width,
            height: c.image_height,
            hfov_deg: c.horizontal_fov.to_degrees(),
            height_m: c.height_above_ground,
            pitch_deg: c.pitch.to_degrees(),
            baseline_m: c.stereo_baseline,
        }
    }

    pub fn model(&self) -> CameraModel {
        CameraModel::new(
            self.width,
            self.height,
            self.hfov_deg.to_radians(),
            self.height_m,
            self.pitch_deg.to_radians(),
            self.baseline_m,
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrajectorySpec {
    #[serde(rename = "type")]
    pub traj_type: TrajectoryType,
    /// Route endpoints; the scenario's route when omitted.
    pub start: Option<[f64; 2]>,
    pub goal: Option<[f64; 2]>,
    pub stop_spacing: f64,
}

impl Default for TrajectorySpec {
    fn default() -> Self {
        Self {
            traj_type: TrajectoryType::HalfSurvey,
            start: None,
            goal: None,
            stop_spacing: 10.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RefineSpec {
    pub start_range: f64,
    pub consecutive_rows: usize,
}

impl Default for RefineSpec {
    fn default() -> Self {
        let r = ReplayConfig::default();
        Self {
            start_range: r.refine_start_range,
            consecutive_rows: r.refine_consecutive_rows,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub output_dir: PathBuf,
    /// Crater map JSON and DEM grid; the scenario is generated from `seed` when omitted.
    pub map: Option<PathBuf>,
    pub dem: Option<PathBuf>,
    pub scenario: ScenarioSpec,
    pub trajectory: TrajectorySpec,
    pub drift_p: f64,
    /// Drift rates for `mc`; `[drift_p]` when empty.
    pub drift_sweep: Vec<f64>,
    pub n_runs: usize,
    /// Filter process noise as a multiple of the drift rate.
    pub process_noise_scale: f64,
    pub camera: CameraSpec,
    pub noise: SensingNoiseModel,
    pub detection: DetectionParams,
    pub filter: FilterConfig,
    pub refine: RefineSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        let r = ReplayConfig::half_resolution();
        Self {
            seed: 1,
            output_dir: PathBuf::from("out"),
            map: None,
            dem: None,
            scenario: ScenarioSpec::default(),
            trajectory: TrajectorySpec::default(),
            drift_p: 0.02,
            drift_sweep: Vec::new(),
            n_runs: 30,
            process_noise_scale: r.process_noise_scale.unwrap_or(0.0),
            camera: CameraSpec::default(),
            noise: r.noise,
            detection: r.detection,
            filter: r.filter,
            refine: RefineSpec::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(anyhow::anyhow!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Usage(anyhow::anyhow!("config {}: {e}", path.display())))
    }

    pub fn replay_config(&self) -> ReplayConfig {
        ReplayConfig {
            camera: self.camera.model(),
            noise: self.noise.clone(),
            detection: self.detection.clone(),
            filter: self.filter.clone(),
            refine_start_range: self.refine.start_range,
            refine_consecutive_rows: self.refine.consecutive_rows,
            process_noise_scale: Some(self.process_noise_scale),
        }
    }

    pub fn drift_rates(&self) -> Vec<f64> {
        if self.drift_sweep.is_empty() {
            vec![self.drift_p]
        } else {
            self.drift_sweep.clone()
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let usage = |m: String| Err(CliError::Usage(anyhow::anyhow!(m)));
        if let Err(e) = self.replay_config().validate() {
            return usage(e.to_string());
        }
        if self.map.is_some() != self.dem.is_some() {
            return usage("map and dem must be given together".into());
        }
        for p in self.map.iter().chain(&self.dem) {
            if !p.exists() {
                return usage(format!("referenced file {} does not exist", p.display()));
            }
        }
        if self.n_runs == 0 {
            return usage("n_runs must be at least 1".into());
        }
        if !(self.trajectory.stop_spacing > 0.0) {
            return usage("trajectory.stop_spacing must be positive".into());
        }
        if let Some(p) = self.drift_rates().iter().find(|p| !(**p >= 0.0)) {
            return usage(format!("drift rates must be non-negative, got {p}"));
        }
        if !(self.process_noise_scale >= 0.0) {
            return usage("process_noise_scale must be non-negative".into());
        }
        Ok(())
    }
}
