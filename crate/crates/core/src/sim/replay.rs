use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use super::{derive_seed, TrajectoryPlan, TrajectoryType};
use crate::camera::{refine_stereo, render_range_image, CameraModel, SensingNoiseModel};
use crate::detect::{detect, q_score_points, DetectionParams};
use crate::filter::{simulate_odometry, DriftModel, FilterConfig, ParticleFilter};
use crate::map::{CraterMap, DemRaster, FrontArcs};
use crate::{Error, Pose2, Result};

/// Final error above which a run counts as diverged (m).
pub const DIVERGENCE_THRESHOLD: f64 = 10.0;

const DRIFT_STREAM: u64 = 1;
const FILTER_STREAM: u64 = 2;
const RENDER_STREAM_BASE: u64 = 1 << 32;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReplayConfig {
    pub camera: CameraModel,
    pub noise: SensingNoiseModel,
    pub detection: DetectionParams,
    pub filter: FilterConfig,
    pub refine_start_range: f64,
    pub refine_consecutive_rows: usize,
    /// When set, the filter's process noise is this multiple of the drift rate, replacing
    /// `filter.process_noise_p`.
    pub process_noise_scale: Option<f64>,
}

impl Default for ReplayConfig {
    fn default() -> Self {
        Self {
            camera: CameraModel::default(),
            noise: SensingNoiseModel::default(),
            detection: DetectionParams::default(),
            filter: FilterConfig::default(),
            refine_start_range: 20.0,
            refine_consecutive_rows: 10,
            process_noise_scale: Some(2.5),
        }
    }
}

impl ReplayConfig {
    /// Monte Carlo preset: a 640x480 camera (same field of view and mount) with the disparity
    /// threshold scaled by the focal-length ratio, so jumps are judged at the same depth
    /// resolution as the full-size image at a quarter of the rendering cost.
    pub fn half_resolution() -> Self {
        let full = CameraModel::default();
        let camera = CameraModel::new(
            full.image_width / 2,
            full.image_height / 2,
            full.horizontal_fov,
            full.height_above_ground,
            full.pitch,
            full.stereo_baseline,
        );
        let mut detection = DetectionParams::default();
        detection.disparity_jump_thresh *= camera.focal_length / full.focal_length;
        Self {
            camera,
            detection,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.camera.validate()?;
        self.noise.validate()?;
        self.detection.validate()?;
        self.filter.validate()?;
        if !(self.refine_start_range > 0.0) || self.refine_consecutive_rows == 0 {
            return Err(Error::Config(
                "refine_start_range must be positive and refine_consecutive_rows at least 1".into(),
            ));
        }
        if matches!(self.process_noise_scale, Some(s) if !(s >= 0.0)) {
            return Err(Error::Config("process_noise_scale must be non-negative".into()));
        }
        Ok(())
    }

    /// Filter settings used for a run at drift rate `drift_p`.
    pub fn filter_for(&self, drift_p: f64) -> FilterConfig {
        let mut f = self.filter.clone();
        if let Some(scale) = self.process_noise_scale {
            f.process_noise_p = scale * drift_p;
        }
        f
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub true_pose: Pose2,
    pub estimate: Vector2<f64>,
    pub error: f64,
    pub updated: bool,
    /// Detected points used in the update (0 when the gate was closed).
    pub detected_points: usize,
    /// Q-Score of the detections at the true pose, for diagnostics.
    pub q_score: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub seed: u64,
    pub drift_p: f64,
    pub traj_type: TrajectoryType,
    pub steps: Vec<StepRecord>,
    pub final_error: f64,
    pub diverged: bool,
}

impl RunResult {
    pub fn updates(&self) -> usize {
        self.steps.iter().filter(|s| s.updated).count()
    }
}

/// Drives the plan once: drifting odometry between stops, and at every stop where the gate is
/// open a render, stereo refinement, detection and filter update.
///
/// Images are only rendered where the gate is open; a closed gate discards the measurement
/// anyway, and each stop draws its sensing noise from its own seed, so skipping those renders
/// does not change any result.
pub fn replay(
    plan: &TrajectoryPlan,
    map: &CraterMap,
    dem: &DemRaster,
    config: &ReplayConfig,
    drift_p: f64,
    seed: u64,
) -> Result<RunResult> {
    config.validate()?;
    if !(drift_p >= 0.0) {
        return Err(Error::Config(format!("drift rate must be non-negative, got {drift_p}")));
    }
    let Some(start) = plan.waypoints.first() else {
        return Err(Error::Planning("plan has no waypoints".into()));
    };
    let has_landmarks = map.landmarks().next().is_some();
    let mut drift = DriftModel::new(drift_p, derive_seed(seed, DRIFT_STREAM));
    let mut filter = ParticleFilter::new(start.position(), config.filter_for(drift_p), derive_seed(seed, FILTER_STREAM))?;

    let mut steps = Vec::with_capacity(plan.waypoints.len());
    let est = filter.estimate()?;
    steps.push(StepRecord {
        step: 0,
        true_pose: *start,
        estimate: est,
        error: (est - start.position()).norm(),
        updated: false,
        detected_points: 0,
        q_score: None,
    });

    for (k, w) in plan.waypoints.windows(2).enumerate() {
        let (prev, pose) = (w[0], w[1]);
        let truth = pose.position();
        let odo = simulate_odometry(truth - prev.position(), &mut drift);
        filter.predict(odo);
        filter.step_index += 1;

        let mut updated = false;
        let mut detected_points = 0;
        let mut q_score = None;
        if has_landmarks && plan.observation_stops.contains(&(k + 1)) {
            let arcs = FrontArcs::new(map, pose.heading)?;
            let gate_at = if config.filter.ground_truth_gating {
                truth
            } else {
                filter.estimate()?
            };
            if filter.gate_open(gate_at, &arcs) {
                let img = render_range_image(dem, &pose, &config.camera, &config.noise, derive_seed(seed, RENDER_STREAM_BASE + k as u64))?;
                let img = refine_stereo(&img, config.refine_start_range, config.refine_consecutive_rows);
                let detections = detect(&img, &config.detection);
                let rover_points: Vec<Vector2<f64>> =
                    detections.iter().flat_map(|d| d.rover_points.iter().copied()).collect();
                if !rover_points.is_empty() {
                    q_score = q_score_points(detections.iter().flat_map(|d| d.world_points.iter().copied()), &arcs, config.filter.epsilon);
                    filter.correct(&rover_points, pose.heading, &arcs)?;
                    updated = true;
                    detected_points = rover_points.len();
                }
            }
        }
        let est = filter.estimate()?;
        steps.push(StepRecord {
            step: k + 1,
            true_pose: pose,
            estimate: est,
            error: (est - truth).norm(),
            updated,
            detected_points,
            q_score,
        });
    }

    let final_error = steps.last().map(|s| s.error).unwrap_or(0.0);
    Ok(RunResult {
        seed,
        drift_p,
        traj_type: plan.traj_type,
        steps,
        final_error,
        diverged: final_error > DIVERGENCE_THRESHOLD,
    })
}
