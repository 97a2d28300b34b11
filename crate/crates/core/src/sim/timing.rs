use nalgebra::Vector2;
use serde::{Deserialize, Serialize};
use std::time::Instant;

use super::single_crater_scene;
use crate::camera::{refine_stereo, render_range_image, CameraModel, SensingNoiseModel};
use crate::detect::{detect, DetectionParams, RimDetection};
use crate::filter::{FilterConfig, ParticleFilter};
use crate::map::FrontArcs;
use crate::Result;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub num_particles: usize,
    pub detection_points: usize,
    pub mean_ms: f64,
    pub max_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimingReport {
    pub image_width: usize,
    pub image_height: usize,
    pub detect_mean_ms: f64,
    pub detect_max_ms: f64,
    pub rows: Vec<TimingRow>,
}

fn stats(samples: &[f64]) -> (f64, f64) {
    let mean = samples.iter().sum::<f64>() / samples.len().max(1) as f64;
    (mean, samples.iter().copied().fold(0.0, f64::max))
}

/// Wall time of refine+detect on one image of a 15 m crater seen from 10 m, and of one full
/// filter step (predict, weight update, resampling check) for each particle count.
pub fn timing_harness(camera: &CameraModel, particle_counts: &[usize], repeats: usize, seed: u64) -> Result<TimingReport> {
    let repeats = repeats.max(1);
    let scene = single_crater_scene(15.0)?;
    let pose = scene.view_pose(10.0);
    let img = render_range_image(&scene.dem, &pose, camera, &SensingNoiseModel::default(), seed)?;
    let params = DetectionParams::default();

    let mut detect_ms = Vec::with_capacity(repeats);
    let mut detections: Vec<RimDetection> = Vec::new();
    for _ in 0..repeats {
        let t = Instant::now();
        detections = detect(&refine_stereo(&img, 20.0, 10), &params);
        detect_ms.push(t.elapsed().as_secs_f64() * 1e3);
    }
    let (detect_mean_ms, detect_max_ms) = stats(&detect_ms);

    let arcs = FrontArcs::new(&scene.map, pose.heading)?;
    let mut rows = Vec::with_capacity(particle_counts.len());
    for &n in particle_counts {
        let config = FilterConfig {
            num_particles: n,
            n_eff_thresh: n as f64 / 2.0,
            ..FilterConfig::default()
        };
        let mut filter = ParticleFilter::new(pose.position(), config, seed)?;
        let mut ms = Vec::with_capacity(repeats);
        for _ in 0..repeats {
            let t = Instant::now();
            filter.step(Vector2::zeros(), Some(&detections), pose.heading, &arcs, None)?;
            ms.push(t.elapsed().as_secs_f64() * 1e3);
        }
        let (mean_ms, max_ms) = stats(&ms);
        rows.push(TimingRow {
            num_particles: n,
            detection_points: detections.iter().map(|d| d.rover_points.len()).sum(),
            mean_ms,
            max_ms,
        });
    }
    Ok(TimingReport {
        image_width: camera.image_width,
        image_height: camera.image_height,
        detect_mean_ms,
        detect_max_ms,
        rows,
    })
}
