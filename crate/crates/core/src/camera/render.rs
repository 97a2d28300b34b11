use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::{CameraModel, RangeImage, SensingNoiseModel};
use crate::map::DemRaster;
use crate::{Error, Pose2, Result};

const BISECTION_TOLERANCE: f64 = 1e-5;

/// Ray-marches every pixel against the bilinear DEM surface and applies the sensing model.
///
/// Steps are the larger of half a DEM cell and the distance the ray can travel before the gap to
/// the terrain could possibly close (bounded by the DEM slope), so no crossing is skipped by a
/// long step; the first crossing is refined by bisection. Rays beyond `max_lit_range` or leaving
/// the DEM are holes. Each row draws its noise from its own ChaCha stream, so the result depends
/// only on `seed`.
pub fn render_range_image(
    dem: &DemRaster,
    pose: &Pose2,
    cam: &CameraModel,
    noise: &SensingNoiseModel,
    seed: u64,
) -> Result<RangeImage> {
    cam.validate()?;
    noise.validate()?;
    let ground = dem
        .elevation(pose.x, pose.y)
        .ok_or(Error::OutOfBounds { x: pose.x, y: pose.y })?;
    let origin = [pose.x, pose.y, ground + cam.height_above_ground];
    let (sh, ch) = pose.heading.sin_cos();
    let marcher = Marcher {
        dem,
        origin,
        slope: dem.slope_bound(),
        min_step: 0.5 * dem.resolution(),
        t_max: noise.max_lit_range,
    };
    let noisy = !noise.is_noiseless();

    let w = cam.image_width;
    let mut ranges = vec![f32::NAN; w * cam.image_height];
    ranges.par_chunks_mut(w).enumerate().for_each(|(v, row)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(v as u64);
        for (u, out) in row.iter_mut().enumerate() {
            let d = cam.ray_direction(u as f64, v as f64);
            let dir = [ch * d.x - sh * d.y, sh * d.x + ch * d.y, d.z];
            let Some(r) = marcher.first_hit(dir) else {
                continue;
            };
            if !noisy {
                *out = r as f32;
                continue;
            }
            let n: f64 = rng.sample(StandardNormal);
            let hole: f64 = rng.gen();
            let noisy_r = r + noise.sigma(r) * n;
            if hole >= noise.hole_probability(r) && noisy_r > 0.0 && noisy_r <= noise.max_lit_range {
                *out = noisy_r as f32;
            }
        }
    });
    RangeImage::new(w, cam.image_height, ranges, *pose, cam.clone())
}

struct Marcher<'a> {
    dem: &'a DemRaster,
    origin: [f64; 3],
    slope: f64,
    min_step: f64,
    t_max: f64,
}

impl Marcher<'_> {
    /// Height of the ray above the terrain at parameter `t`; `None` once off the DEM.
    #[inline]
    fn gap(&self, dir: [f64; 3], t: f64) -> Option<f64> {
        let x = self.origin[0] + dir[0] * t;
        let y = self.origin[1] + dir[1] * t;
        let z = self.origin[2] + dir[2] * t;
        self.dem.elevation(x, y).map(|g| z - g)
    }

    fn first_hit(&self, dir: [f64; 3]) -> Option<f64> {
        let horiz = dir[0].hypot(dir[1]);
        // fastest rate at which the gap can shrink per unit of ray length
        let closing = self.slope * horiz - dir[2];
        if closing <= 0.0 {
            return None;
        }
        let mut t = 0.0;
        let mut gap = self.gap(dir, 0.0)?;
        if gap <= 0.0 {
            return None;
        }
        loop {
            if t >= self.t_max {
                return None;
            }
            let next = (t + (gap / closing).max(self.min_step)).min(self.t_max);
            let g = self.gap(dir, next)?;
            if g <= 0.0 {
                return Some(self.bisect(dir, t, next));
            }
            t = next;
            gap = g;
        }
    }

    fn bisect(&self, dir: [f64; 3], mut lo: f64, mut hi: f64) -> f64 {
        while hi - lo > BISECTION_TOLERANCE {
            let mid = 0.5 * (lo + hi);
            match self.gap(dir, mid) {
                Some(g) if g > 0.0 => lo = mid,
                _ => hi = mid,
            }
        }
        0.5 * (lo + hi)
    }
}
