use nalgebra::Vector2;
use rand::Rng;
use rayon::prelude::*;

use super::ParticleSet;
use crate::detect::q_score;
use crate::map::FrontArcs;
use crate::{rover_to_world_at, Error, Result};

/// Normalized weights from log-weights via log-sum-exp.
pub fn normalized_weights(log_weights: &[f64]) -> Result<Vec<f64>> {
    let max = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(Error::DegenerateFilter(
            "no particle has a finite log-weight".into(),
        ));
    }
    let lse = max + log_weights.iter().map(|w| (w - max).exp()).sum::<f64>().ln();
    Ok(log_weights.iter().map(|w| (w - lse).exp()).collect())
}

/// `1 / sum(w_i^2)` of the normalized weights; 0 for a degenerate set.
pub fn effective_sample_size(ps: &ParticleSet) -> f64 {
    match normalized_weights(&ps.log_weights) {
        Ok(w) => 1.0 / w.iter().map(|x| x * x).sum::<f64>(),
        Err(_) => 0.0,
    }
}

/// Log Q-Score of the rover-frame points seen from each particle (known heading).
pub fn particle_log_scores(
    ps: &ParticleSet,
    rover_points: &[Vector2<f64>],
    heading: f64,
    arcs: &FrontArcs,
    epsilon: f64,
) -> Vec<f64> {
    let m = rover_points.len();
    ps.particles
        .par_iter()
        .map(|&origin| {
            let sum: f64 = rover_points
                .iter()
                .map(|&p| arcs.nearest_distance(rover_to_world_at(origin, heading, p)))
                .sum();
            q_score(sum, m, epsilon).ln()
        })
        .collect()
}

/// Adds `log Q_i - min_j log Q_j` to every particle's log-weight and returns the increments.
///
/// The caller guarantees at least one point; with none the weights are left alone.
pub fn update_weights(
    ps: &mut ParticleSet,
    rover_points: &[Vector2<f64>],
    heading: f64,
    arcs: &FrontArcs,
    epsilon: f64,
) -> Vec<f64> {
    if rover_points.is_empty() {
        return vec![0.0; ps.len()];
    }
    let q = particle_log_scores(ps, rover_points, heading, arcs, epsilon);
    let q_min = q.iter().copied().fold(f64::INFINITY, f64::min);
    let inc: Vec<f64> = q.iter().map(|qi| qi - q_min).collect();
    for (w, d) in ps.log_weights.iter_mut().zip(&inc) {
        *w += d;
    }
    inc
}

/// Systematic resampling with a random offset `u0 ~ U(0, 1/N)`.
pub fn systematic_resample<R: Rng>(ps: &ParticleSet, rng: &mut R) -> Result<ParticleSet> {
    let u0 = rng.gen::<f64>() / ps.len() as f64;
    systematic_resample_with_offset(ps, u0)
}

/// Systematic resampling for a given offset: slot `n` takes the first particle whose
/// cumulative weight exceeds `u0 + n/N`. Output weights are uniform (log-weight 0).
pub fn systematic_resample_with_offset(ps: &ParticleSet, u0: f64) -> Result<ParticleSet> {
    let w = normalized_weights(&ps.log_weights)?;
    let n = w.len();
    let cum: Vec<f64> = w
        .iter()
        .scan(0.0, |acc, x| {
            *acc += x;
            Some(*acc)
        })
        .collect();
    let mut m = 0;
    let mut particles = Vec::with_capacity(n);
    for slot in 0..n {
        let u = u0 + slot as f64 / n as f64;
        while m + 1 < n && cum[m] <= u {
            m += 1;
        }
        particles.push(ps.particles[m]);
    }
    Ok(ParticleSet::from_particles(particles))
}
