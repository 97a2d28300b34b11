//! Crater leading-edge detection on range images and detection-quality metrics.

mod io;
mod morphology;
mod score;

pub use io::{detections_to_jsonl, write_detections_jsonl};
pub use score::{q_score, q_score_points, rim_percent_detected, score_detections, DEFAULT_EPSILON};

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use crate::camera::{pixel_to_rover_frame, RangeImage};
use crate::{Error, Result};

/// Thresholds for the discontinuity search and contour filtering.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectionParams {
    /// Minimum disparity drop (pixels) between the near and far pixel of a jump.
    pub disparity_jump_thresh: f64,
    /// Minimum range increase (metres) between the near and far pixel of a jump.
    pub range_jump_thresh: f64,
    pub dilate_erode_radius: usize,
    pub min_contour_pixels: usize,
    pub min_width_m: f64,
    pub max_width_m: f64,
}

impl Default for DetectionParams {
    fn default() -> Self {
        Self {
            disparity_jump_thresh: 3.0,
            range_jump_thresh: 2.0,
            dilate_erode_radius: 2,
            min_contour_pixels: 15,
            min_width_m: 2.0,
            max_width_m: 30.0,
        }
    }
}

impl DetectionParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("disparity_jump_thresh", self.disparity_jump_thresh),
            ("range_jump_thresh", self.range_jump_thresh),
            ("min_width_m", self.min_width_m),
            ("max_width_m", self.max_width_m),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.dilate_erode_radius == 0 || self.min_contour_pixels == 0 {
            return Err(Error::Config(
                "dilate_erode_radius and min_contour_pixels must be at least 1".into(),
            ));
        }
        if self.min_width_m >= self.max_width_m {
            return Err(Error::Config(format!(
                "min_width_m ({}) must be below max_width_m ({})",
                self.min_width_m, self.max_width_m
            )));
        }
        Ok(())
    }
}

/// Binary image of marked leading-edge pixels, row-major like [`RangeImage`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DetectionMask {
    pub width: usize,
    pub height: usize,
    pub marked: Vec<bool>,
}

impl DetectionMask {
    pub fn empty(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            marked: vec![false; width * height],
        }
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> bool {
        self.marked[v * self.width + u]
    }

    pub fn set(&mut self, u: usize, v: usize) {
        self.marked[v * self.width + u] = true;
    }

    pub fn count(&self) -> usize {
        self.marked.iter().filter(|&&m| m).count()
    }
}

/// One crater leading-edge contour.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RimDetection {
    /// `(u, v)` pixel coordinates, sorted row-major.
    pub contour_pixels: Vec<(u32, u32)>,
    /// Ground-plane points in the rover frame (x forward, y left), one per pixel.
    pub rover_points: Vec<Vector2<f64>>,
    /// The same points placed in the world frame using the image's camera pose.
    pub world_points: Vec<Vector2<f64>>,
    pub mean_range: f64,
    pub est_width: f64,
}

/// Crater width from its pixel extent: `W_m = W_px * R_m / f`.
#[inline]
pub fn estimate_width(pixel_extent: f64, mean_range: f64, focal_length: f64) -> f64 {
    pixel_extent * mean_range / focal_length
}

/// Marks the near pixel of every jump that is both a range and a disparity discontinuity.
///
/// Each column is scanned from the bottom row upward; holes are skipped so the comparison is
/// always between consecutive valid returns.
pub fn detect_discontinuities(img: &RangeImage, params: &DetectionParams) -> DetectionMask {
    let mut mask = DetectionMask::empty(img.width, img.height);
    let fb = img.camera.focal_length * img.camera.stereo_baseline;
    for u in 0..img.width {
        let mut prev: Option<(usize, f64)> = None;
        for v in (0..img.height).rev() {
            let Some(r) = img.get(u, v) else { continue };
            let r = r as f64;
            if let Some((pv, pr)) = prev {
                let range_jump = r - pr;
                let disparity_drop = fb / pr - fb / r;
                if range_jump > params.range_jump_thresh && disparity_drop > params.disparity_jump_thresh {
                    mask.set(u, pv);
                }
            }
            prev = Some((v, r));
        }
    }
    mask
}

/// Groups marked pixels into contours and keeps those that look like a crater rim.
///
/// The mask is closed (dilated then eroded) so nearby marks join up, and 8-connected components
/// of the closed mask are collected. A component's contour consists of the originally marked
/// pixels it contains: bridging pixels added by the closing carry no rim range of their own.
/// Components with fewer than `min_contour_pixels` contour pixels, or whose estimated width falls
/// outside `[min_width_m, max_width_m]`, are dropped.
pub fn extract_contours(mask: &DetectionMask, params: &DetectionParams, img: &RangeImage) -> Vec<RimDetection> {
    assert_eq!((mask.width, mask.height), (img.width, img.height), "mask and image sizes differ");
    let closed = morphology::close(mask, params.dilate_erode_radius);
    let cam = &img.camera;
    morphology::components(&closed)
        .into_iter()
        .filter_map(|component| {
            let pixels: Vec<(u32, u32)> = component
                .into_iter()
                .filter(|&i| mask.marked[i] && !img.ranges[i].is_nan())
                .map(|i| ((i % mask.width) as u32, (i / mask.width) as u32))
                .collect();
            if pixels.len() < params.min_contour_pixels {
                return None;
            }
            let ranges: Vec<f64> = pixels.iter().map(|&(u, v)| img.ranges[v as usize * img.width + u as usize] as f64).collect();
            let mean_range = ranges.iter().sum::<f64>() / ranges.len() as f64;
            let (lo, hi) = pixels.iter().fold((u32::MAX, 0), |(lo, hi), &(u, _)| (lo.min(u), hi.max(u)));
            let est_width = estimate_width((hi - lo) as f64, mean_range, cam.focal_length);
            if est_width < params.min_width_m || est_width > params.max_width_m {
                return None;
            }
            let rover_points: Vec<Vector2<f64>> = pixels
                .iter()
                .zip(&ranges)
                .map(|(&(u, v), &r)| {
                    pixel_to_rover_frame(u as f64, v as f64, r, cam)
                        .expect("valid pixel ranges are positive")
                        .xy()
                })
                .collect();
            let world_points = rover_points.iter().map(|p| img.camera_pose.rover_to_world(*p)).collect();
            Some(RimDetection {
                contour_pixels: pixels,
                rover_points,
                world_points,
                mean_range,
                est_width,
            })
        })
        .collect()
}

/// Discontinuity search followed by contour extraction.
pub fn detect(img: &RangeImage, params: &DetectionParams) -> Vec<RimDetection> {
    extract_contours(&detect_discontinuities(img, params), params, img)
}
