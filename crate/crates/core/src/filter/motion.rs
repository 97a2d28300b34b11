use nalgebra::Vector2;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::f64::consts::PI;

use super::ParticleSet;

/// Relative-localization drift: a per-run bias direction plus distance-proportional noise.
#[derive(Clone, Debug)]
pub struct DriftModel {
    /// Error rate `p` (0.02 = 2% of distance travelled).
    pub error_rate: f64,
    /// Unit bias direction, drawn once when the model is created.
    pub bias_direction: Vector2<f64>,
    rng: ChaCha8Rng,
}

impl DriftModel {
    /// Draws the bias direction uniformly over the circle from `seed`.
    pub fn new(error_rate: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = rng.gen_range(0.0..2.0 * PI);
        Self::with_direction(error_rate, Vector2::new(a.cos(), a.sin()), rng)
    }

    pub fn with_direction(error_rate: f64, bias_direction: Vector2<f64>, rng: ChaCha8Rng) -> Self {
        assert!(error_rate >= 0.0, "error rate must be non-negative");
        Self {
            error_rate,
            bias_direction: bias_direction.normalize(),
            rng,
        }
    }

    /// Mean odometry error for a true step: `mu = d * p * |s'|`.
    pub fn bias_mean(&self, step_true: Vector2<f64>) -> Vector2<f64> {
        self.bias_direction * (self.error_rate * step_true.norm())
    }
}

/// Odometry reading for a true step: `s = s' + r` with `r ~ N(mu, diag(|mu_x|, |mu_y|))`.
pub fn simulate_odometry(step_true: Vector2<f64>, drift: &mut DriftModel) -> Vector2<f64> {
    let mu = drift.bias_mean(step_true);
    let nx: f64 = drift.rng.sample(StandardNormal);
    let ny: f64 = drift.rng.sample(StandardNormal);
    step_true + mu + Vector2::new(mu.x.abs().sqrt() * nx, mu.y.abs().sqrt() * ny)
}

/// Moves every particle by `step` plus zero-mean Gaussian noise with
/// `sigma = process_noise_p * |step|` per axis. Weights are untouched.
pub fn propagate<R: Rng>(ps: &mut ParticleSet, step: Vector2<f64>, process_noise_p: f64, rng: &mut R) {
    let sigma = process_noise_p * step.norm();
    for p in &mut ps.particles {
        *p += step;
        if sigma > 0.0 {
            let nx: f64 = rng.sample(StandardNormal);
            let ny: f64 = rng.sample(StandardNormal);
            *p += Vector2::new(nx, ny) * sigma;
        }
    }
}
