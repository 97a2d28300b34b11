//! Drifting odometry and the Q-Score-weighted, log-domain particle filter.

mod motion;
mod weights;

pub use motion::{propagate, simulate_odometry, DriftModel};
pub use weights::{
    effective_sample_size, normalized_weights, particle_log_scores, systematic_resample,
    systematic_resample_with_offset, update_weights,
};

use nalgebra::Vector2;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::Path;

use crate::detect::RimDetection;
use crate::map::{CraterMap, FrontArcs};
use crate::{Error, Result};

/// 2D position hypothesis (m, world frame).
pub type Belief = Vector2<f64>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterConfig {
    pub num_particles: usize,
    /// Resample when the effective sample size drops to this value or below.
    pub n_eff_thresh: f64,
    /// Q-Score divide-by-zero guard (m).
    pub epsilon: f64,
    /// Standard deviation of the initial cloud about the start pose (m, per axis).
    pub init_sigma: f64,
    /// Measurement updates run only within this distance of a landmark front arc (m).
    pub gate_radius: f64,
    /// Process noise as a fraction of step length (sigma per axis = p * |step|).
    pub process_noise_p: f64,
    /// Gate on the true position instead of the estimate (reproduces ground-truth gating).
    pub ground_truth_gating: bool,
    /// Heading error added when re-projecting detections (rad, 0 = exact heading).
    pub heading_noise_sigma: f64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            num_particles: 100,
            n_eff_thresh: 50.0,
            epsilon: crate::detect::DEFAULT_EPSILON,
            init_sigma: 3.0,
            gate_radius: 20.0,
            process_noise_p: 0.05,
            ground_truth_gating: false,
            heading_noise_sigma: 0.0,
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<()> {
        let n = self.num_particles as f64;
        if self.num_particles == 0 || !(self.n_eff_thresh >= 1.0 && self.n_eff_thresh <= n) {
            return Err(Error::Config(format!(
                "need 1 <= n_eff_thresh <= num_particles, got {} and {}",
                self.n_eff_thresh, self.num_particles
            )));
        }
        if !(self.gate_radius > 0.0) || !(self.epsilon > 0.0) {
            return Err(Error::Config("gate_radius and epsilon must be positive".into()));
        }
        if self.init_sigma < 0.0 || self.process_noise_p < 0.0 || self.heading_noise_sigma < 0.0 {
            return Err(Error::Config(
                "init_sigma, process_noise_p and heading_noise_sigma must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// Particles with persistent log-domain weights.
#[derive(Clone, Debug, PartialEq)]
pub struct ParticleSet {
    pub particles: Vec<Belief>,
    pub log_weights: Vec<f64>,
}

impl ParticleSet {
    /// Equal weights (all log-weights zero).
    pub fn from_particles(particles: Vec<Belief>) -> Self {
        let log_weights = vec![0.0; particles.len()];
        Self { particles, log_weights }
    }

    /// `n` particles drawn from an isotropic Gaussian about `center`.
    pub fn gaussian<R: Rng>(center: Belief, sigma: f64, n: usize, rng: &mut R) -> Self {
        let particles = (0..n)
            .map(|_| {
                let nx: f64 = rng.sample(StandardNormal);
                let ny: f64 = rng.sample(StandardNormal);
                center + Vector2::new(nx, ny) * sigma
            })
            .collect();
        Self::from_particles(particles)
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    /// Weighted mean of the particles.
    pub fn estimate(&self) -> Result<Belief> {
        let w = normalized_weights(&self.log_weights)?;
        Ok(self.particles.iter().zip(&w).map(|(p, wi)| p * *wi).sum())
    }

    /// Shifts log-weights so the largest is zero. Leaves normalized weights unchanged.
    pub fn shift_to_max(&mut self) {
        let max = self.log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if max.is_finite() {
            for w in &mut self.log_weights {
                *w -= max;
            }
        }
    }
}

/// What one `filter_step` did.
#[derive(Clone, Debug, PartialEq)]
pub struct StepOutcome {
    pub estimate: Belief,
    pub updated: bool,
    pub n_eff: Option<f64>,
    pub resampled: bool,
}

/// Particle filter state owned by a single replay.
#[derive(Clone, Debug)]
pub struct ParticleFilter {
    pub set: ParticleSet,
    pub config: FilterConfig,
    pub step_index: usize,
    rng: ChaCha8Rng,
}

impl ParticleFilter {
    pub fn new(start: Belief, config: FilterConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let set = ParticleSet::gaussian(start, config.init_sigma, config.num_particles, &mut rng);
        Ok(Self {
            set,
            config,
            step_index: 0,
            rng,
        })
    }

    pub fn estimate(&self) -> Result<Belief> {
        self.set.estimate()
    }

    pub fn predict(&mut self, step: Vector2<f64>) {
        propagate(&mut self.set, step, self.config.process_noise_p, &mut self.rng);
    }

    /// True when `position` is within the gate radius of a landmark front arc.
    pub fn gate_open(&self, position: Belief, arcs: &FrontArcs) -> bool {
        arcs.nearest_distance(position) <= self.config.gate_radius
    }

    /// Weight update from rover-frame detection points, then resampling if degenerate.
    /// Returns `(n_eff, resampled)`.
    pub fn correct(&mut self, rover_points: &[Vector2<f64>], heading: f64, arcs: &FrontArcs) -> Result<(f64, bool)> {
        let heading = if self.config.heading_noise_sigma > 0.0 {
            let n: f64 = self.rng.sample(StandardNormal);
            heading + n * self.config.heading_noise_sigma
        } else {
            heading
        };
        update_weights(&mut self.set, rover_points, heading, arcs, self.config.epsilon);
        // Alg. 2 never renormalizes between resamples; the max-shift keeps log-weights bounded.
        self.set.shift_to_max();
        let n_eff = effective_sample_size(&self.set);
        let resample = n_eff <= self.config.n_eff_thresh;
        if resample {
            self.set = systematic_resample(&self.set, &mut self.rng)?;
        }
        Ok((n_eff, resample))
    }

    /// One filter iteration: always propagate; update (and maybe resample) only when detections
    /// are present and the gate is open. `truth` is consulted only for ground-truth gating.
    pub fn step(
        &mut self,
        step: Vector2<f64>,
        detections: Option<&[RimDetection]>,
        heading: f64,
        arcs: &FrontArcs,
        truth: Option<Belief>,
    ) -> Result<StepOutcome> {
        self.predict(step);
        self.step_index += 1;
        let gate_at = match (self.config.ground_truth_gating, truth) {
            (true, Some(t)) => t,
            _ => self.estimate()?,
        };
        let points: Vec<Vector2<f64>> = detections
            .unwrap_or(&[])
            .iter()
            .flat_map(|d| d.rover_points.iter().copied())
            .collect();
        let (mut n_eff, mut resampled, mut updated) = (None, false, false);
        if !points.is_empty() && self.gate_open(gate_at, arcs) {
            let (n, r) = self.correct(&points, heading, arcs)?;
            n_eff = Some(n);
            resampled = r;
            updated = true;
        }
        Ok(StepOutcome {
            estimate: self.estimate()?,
            updated,
            n_eff,
            resampled,
        })
    }

    pub fn snapshot(&self) -> Result<FilterSnapshot> {
        Ok(FilterSnapshot {
            step_index: self.step_index,
            particles: self.set.particles.iter().map(|p| [p.x, p.y]).collect(),
            log_weights: self.set.log_weights.clone(),
            estimate: {
                let e = self.estimate()?;
                [e.x, e.y]
            },
        })
    }
}

/// Convenience wrapper matching the functional form: builds the front arcs for `heading` and
/// runs one [`ParticleFilter::step`].
pub fn filter_step(
    filter: &mut ParticleFilter,
    step: Vector2<f64>,
    detections: Option<&[RimDetection]>,
    map: &CraterMap,
    heading: f64,
) -> Result<StepOutcome> {
    let arcs = FrontArcs::new(map, heading)?;
    filter.step(step, detections, heading, &arcs, None)
}

/// Serializable filter state for debugging and replay inspection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FilterSnapshot {
    pub step_index: usize,
    pub particles: Vec<[f64; 2]>,
    pub log_weights: Vec<f64>,
    pub estimate: [f64; 2],
}

impl FilterSnapshot {
    pub fn write_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }
}
