use nalgebra::Vector2;

use super::RimDetection;
use crate::map::{CraterMap, FrontArcs, RimArc};
use crate::{Pose2, Result};

/// Divide-by-zero guard added to the summed distances (metres).
pub const DEFAULT_EPSILON: f64 = 1e-3;

/// `min(1, m / (eps + sum_distance))` for `m` detected points.
#[inline]
pub fn q_score(sum_distance: f64, count: usize, epsilon: f64) -> f64 {
    (count as f64 / (epsilon + sum_distance)).min(1.0)
}

/// Q-Score of world points against precomputed front arcs; `None` for an empty point set.
pub fn q_score_points<I>(points: I, arcs: &FrontArcs, epsilon: f64) -> Option<f64>
where
    I: IntoIterator<Item = Vector2<f64>>,
{
    let (sum, m) = points
        .into_iter()
        .fold((0.0, 0usize), |(s, m), p| (s + arcs.nearest_distance(p), m + 1));
    (m > 0).then(|| q_score(sum, m, epsilon))
}

/// Q-Score of all detected world points against the landmark front arcs seen from
/// `camera_pose`. `Ok(None)` means there is no measurement (no detected points).
pub fn score_detections(
    detections: &[RimDetection],
    map: &CraterMap,
    camera_pose: &Pose2,
    epsilon: f64,
) -> Result<Option<f64>> {
    let arcs = FrontArcs::new(map, camera_pose.heading)?;
    Ok(q_score_points(
        detections.iter().flat_map(|d| d.world_points.iter().copied()),
        &arcs,
        epsilon,
    ))
}

/// Percentage of ground-truth arc points that are the nearest arc point of at least one
/// detected world point.
pub fn rim_percent_detected(detections: &[RimDetection], gt_arc: &RimArc) -> f64 {
    let total = gt_arc.points.len();
    if total == 0 {
        return 0.0;
    }
    let mut matched = vec![false; total];
    for p in detections.iter().flat_map(|d| &d.world_points) {
        let nearest = gt_arc
            .points
            .iter()
            .enumerate()
            .map(|(i, q)| (i, (q - p).norm_squared()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(i, _)| i);
        if let Some(i) = nearest {
            matched[i] = true;
        }
    }
    100.0 * matched.iter().filter(|&&m| m).count() as f64 / total as f64
}
