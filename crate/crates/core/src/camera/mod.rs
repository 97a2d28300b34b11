//! Pinhole camera over the DEM: synthetic range images and far-range refinement.

mod io;
mod refine;
mod render;

pub use io::{read_range_image, write_range_image};
pub use refine::refine_stereo;
pub use render::render_range_image;

use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::{Error, Pose2, Result};

/// Pinhole stereo head on a mast. Rover frame: x forward, y left, z up, origin on the ground
/// below the camera. Pitch is positive downward.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CameraModel {
    /// Focal length in pixels.
    pub focal_length: f64,
    pub image_width: usize,
    pub image_height: usize,
    pub height_above_ground: f64,
    pub pitch: f64,
    pub horizontal_fov: f64,
    pub stereo_baseline: f64,
}

impl Default for CameraModel {
    fn default() -> Self {
        Self::new(1280, 960, 60f64.to_radians(), 2.5, 15f64.to_radians(), 0.26)
    }
}

impl CameraModel {
    /// Builds a camera whose focal length is implied by the width and horizontal field of view.
    pub fn new(
        image_width: usize,
        image_height: usize,
        horizontal_fov: f64,
        height_above_ground: f64,
        pitch: f64,
        stereo_baseline: f64,
    ) -> Self {
        let focal_length = 0.5 * image_width as f64 / (0.5 * horizontal_fov).tan();
        Self {
            focal_length,
            image_width,
            image_height,
            height_above_ground,
            pitch,
            horizontal_fov,
            stereo_baseline,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.image_width == 0 || self.image_height == 0 {
            return Err(Error::Config("image dimensions must be positive".into()));
        }
        if !(self.focal_length > 0.0) || !(self.stereo_baseline > 0.0) {
            return Err(Error::Config("focal length and stereo baseline must be positive".into()));
        }
        if !(self.height_above_ground > 0.0) {
            return Err(Error::Config("camera height must be positive".into()));
        }
        let implied = 2.0 * (0.5 * self.image_width as f64 / self.focal_length).atan();
        if (implied - self.horizontal_fov).abs() > 1e-6 {
            return Err(Error::Config(format!(
                "horizontal FOV {:.6} rad disagrees with focal length (implies {implied:.6} rad)",
                self.horizontal_fov
            )));
        }
        Ok(())
    }

    /// Warning text when the mast height falls outside the 1.5-3.0 m operating band.
    pub fn operating_band_warning(&self) -> Option<String> {
        let h = self.height_above_ground;
        (!(1.5..=3.0).contains(&h))
            .then(|| format!("camera height {h} m is outside the expected 1.5-3.0 m band"))
    }

    pub fn principal_point(&self) -> (f64, f64) {
        (
            0.5 * (self.image_width as f64 - 1.0),
            0.5 * (self.image_height as f64 - 1.0),
        )
    }

    fn axes(&self) -> (Vector3<f64>, Vector3<f64>, Vector3<f64>) {
        let (s, c) = self.pitch.sin_cos();
        let forward = Vector3::new(c, 0.0, -s);
        let left = Vector3::new(0.0, 1.0, 0.0);
        let up = Vector3::new(s, 0.0, c);
        (forward, left, up)
    }

    /// Unit ray direction (rover frame) through pixel `(u, v)`; `v` grows downward.
    pub fn ray_direction(&self, u: f64, v: f64) -> Vector3<f64> {
        let (cx, cy) = self.principal_point();
        let (forward, left, up) = self.axes();
        (forward * self.focal_length + left * (cx - u) + up * (cy - v)).normalize()
    }

    /// Projects a rover-frame point to pixel coordinates; `None` behind the camera.
    pub fn project(&self, p: Vector3<f64>) -> Option<(f64, f64)> {
        let (cx, cy) = self.principal_point();
        let (forward, left, up) = self.axes();
        let rel = p - Vector3::new(0.0, 0.0, self.height_above_ground);
        let depth = rel.dot(&forward);
        if depth <= 0.0 {
            return None;
        }
        Some((
            cx - self.focal_length * rel.dot(&left) / depth,
            cy - self.focal_length * rel.dot(&up) / depth,
        ))
    }

    /// Disparity (pixels) of a return at `range` metres.
    pub fn disparity(&self, range: f64) -> f64 {
        self.focal_length * self.stereo_baseline / range
    }
}

/// Back-projects pixel `(u, v)` at Euclidean `range` to a rover-frame 3D point.
pub fn pixel_to_rover_frame(u: f64, v: f64, range: f64, cam: &CameraModel) -> Result<Vector3<f64>> {
    if !range.is_finite() || range <= 0.0 {
        return Err(Error::Config(format!("range must be finite and positive, got {range}")));
    }
    Ok(Vector3::new(0.0, 0.0, cam.height_above_ground) + cam.ray_direction(u, v) * range)
}

/// Range noise, hole injection and the illumination limit of the lit stereo stack.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensingNoiseModel {
    /// sigma(r) = c0 + c1*r + c2*r^2 (metres).
    pub range_sigma_coeffs: [f64; 3],
    pub hole_base_prob: f64,
    /// Per-metre hole probability growth beyond `hole_growth_start`.
    pub hole_range_growth: f64,
    pub hole_growth_start: f64,
    /// Returns beyond this range are unlit and become holes.
    pub max_lit_range: f64,
}

impl Default for SensingNoiseModel {
    fn default() -> Self {
        Self {
            range_sigma_coeffs: [0.0, 0.0, 0.0025],
            hole_base_prob: 0.05,
            hole_range_growth: 0.04,
            hole_growth_start: 20.0,
            max_lit_range: 40.0,
        }
    }
}

impl SensingNoiseModel {
    pub fn noiseless(max_lit_range: f64) -> Self {
        Self {
            range_sigma_coeffs: [0.0; 3],
            hole_base_prob: 0.0,
            hole_range_growth: 0.0,
            hole_growth_start: 0.0,
            max_lit_range,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.max_lit_range > 0.0) {
            return Err(Error::Config("max_lit_range must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.hole_base_prob) || self.hole_range_growth < 0.0 {
            return Err(Error::Config(
                "hole_base_prob must lie in [0,1] and hole_range_growth must be >= 0".into(),
            ));
        }
        Ok(())
    }

    pub fn sigma(&self, range: f64) -> f64 {
        let [c0, c1, c2] = self.range_sigma_coeffs;
        (c0 + c1 * range + c2 * range * range).max(0.0)
    }

    pub fn hole_probability(&self, range: f64) -> f64 {
        let extra = (range - self.hole_growth_start).max(0.0) * self.hole_range_growth;
        (self.hole_base_prob + extra).clamp(0.0, 1.0)
    }

    pub fn is_noiseless(&self) -> bool {
        self.range_sigma_coeffs == [0.0; 3] && self.hole_base_prob == 0.0 && self.hole_range_growth == 0.0
    }
}

/// Per-pixel Euclidean range in metres, row-major with row 0 at the top; `NaN` marks a hole.
#[derive(Clone, Debug)]
pub struct RangeImage {
    pub width: usize,
    pub height: usize,
    pub ranges: Vec<f32>,
    pub camera_pose: Pose2,
    pub camera: CameraModel,
}

/// Holes compare equal to holes.
impl PartialEq for RangeImage {
    fn eq(&self, other: &Self) -> bool {
        self.width == other.width
            && self.height == other.height
            && self.camera_pose == other.camera_pose
            && self.camera == other.camera
            && self
                .ranges
                .iter()
                .zip(&other.ranges)
                .all(|(a, b)| a == b || (a.is_nan() && b.is_nan()))
    }
}

impl RangeImage {
    pub fn new(width: usize, height: usize, ranges: Vec<f32>, camera_pose: Pose2, camera: CameraModel) -> Result<Self> {
        if ranges.len() != width * height {
            return Err(Error::Config(format!(
                "range buffer has {} values, expected {}",
                ranges.len(),
                width * height
            )));
        }
        if let Some(i) = ranges.iter().position(|r| !r.is_nan() && !(r.is_finite() && *r > 0.0)) {
            return Err(Error::Config(format!("range at index {i} is not positive and finite")));
        }
        Ok(Self {
            width,
            height,
            ranges,
            camera_pose,
            camera,
        })
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> Option<f32> {
        let r = self.ranges[v * self.width + u];
        (!r.is_nan()).then_some(r)
    }

    pub fn row(&self, v: usize) -> &[f32] {
        &self.ranges[v * self.width..(v + 1) * self.width]
    }

    pub fn hole_count(&self) -> usize {
        self.ranges.iter().filter(|r| r.is_nan()).count()
    }

    /// World-frame ground position of pixel `(u, v)` at its stored range.
    pub fn world_point(&self, u: usize, v: usize) -> Option<Vector2<f64>> {
        let r = self.get(u, v)? as f64;
        let p = pixel_to_rover_frame(u as f64, v as f64, r, &self.camera).ok()?;
        Some(self.camera_pose.rover_to_world(p.xy()))
    }
}
