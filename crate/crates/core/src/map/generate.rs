use nalgebra::Vector2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::{Crater, CraterMap, DemRaster};
use crate::{Error, Result};

/// Radial reach of the raised lip outside the rim, as a fraction of the crater radius.
pub const LIP_EXTENT: f64 = 0.5;

const BASE_WAVES: usize = 4;
const PLACEMENT_ATTEMPTS: usize = 20_000;

/// Background crater population (non-landmark craters).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CraterDensity {
    /// Mean crater count per hectare.
    pub per_hectare: f64,
    pub min_diameter: f64,
    pub max_diameter: f64,
    /// Cumulative power-law exponent, N(>D) ~ D^-exponent.
    pub exponent: f64,
    /// Minimum gap between a background crater's lip and a landmark's lip (m).
    pub landmark_clearance: f64,
}

impl Default for CraterDensity {
    fn default() -> Self {
        Self {
            per_hectare: 3.0,
            min_diameter: 2.0,
            max_diameter: 8.0,
            exponent: 2.0,
            landmark_clearance: 15.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LandmarkPlacement {
    pub x: f64,
    pub y: f64,
    pub diameter: f64,
}

/// Which craters become landmarks: explicit placements first, then `random_count` more
/// placed by rejection sampling.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LandmarkSpec {
    pub placements: Vec<LandmarkPlacement>,
    pub random_count: usize,
    pub diameter: f64,
    /// Minimum lip-to-lip gap between landmarks (m).
    pub min_separation: f64,
    /// Keep random landmark centers this far from the field edge (m).
    pub edge_margin: f64,
}

impl Default for LandmarkSpec {
    fn default() -> Self {
        Self {
            placements: Vec::new(),
            random_count: 1,
            diameter: 15.0,
            min_separation: 30.0,
            edge_margin: 40.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FieldSpec {
    /// DEM cell size (m).
    pub resolution: f64,
    pub rim_sample_spacing: f64,
    pub depth_ratio: f64,
    /// Rim lip height as a fraction of crater depth.
    pub lip_fraction: f64,
    /// Total amplitude of the smooth undulating base surface (m).
    pub base_relief: f64,
    pub density: CraterDensity,
    pub landmarks: LandmarkSpec,
}

impl Default for FieldSpec {
    fn default() -> Self {
        Self {
            resolution: 0.25,
            rim_sample_spacing: 0.25,
            depth_ratio: 0.1,
            lip_fraction: 0.1,
            base_relief: 0.5,
            density: CraterDensity::default(),
            landmarks: LandmarkSpec::default(),
        }
    }
}

/// Elevation offset a crater adds at radial distance `rho` from its center.
///
/// Inside the rim the bowl follows a quarter-cosine from `-depth` at the center up to the lip
/// height at the rim; outside, the lip decays to zero over `LIP_EXTENT * radius` with a
/// raised-cosine. The crest at the rim is a slope break, which is what casts the occlusion edge.
pub fn crater_relief(crater: &Crater, lip_fraction: f64, rho: f64) -> f64 {
    let r = crater.radius();
    let lip = lip_fraction * crater.depth;
    if rho < r {
        lip - (crater.depth + lip) * (0.5 * PI * rho / r).cos()
    } else if rho < r * (1.0 + LIP_EXTENT) {
        0.5 * lip * (1.0 + (PI * (rho - r) / (LIP_EXTENT * r)).cos())
    } else {
        0.0
    }
}

fn validate(extent: f64, spec: &FieldSpec) -> Result<()> {
    let bad = |m: String| Err(Error::Config(m));
    if !(extent > 0.0) || !extent.is_finite() {
        return bad(format!("extent must be positive, got {extent}"));
    }
    if !(spec.resolution > 0.0) || extent < 2.0 * spec.resolution {
        return bad(format!(
            "extent {extent} m must cover at least two cells of {} m",
            spec.resolution
        ));
    }
    if !(spec.rim_sample_spacing > 0.0) || !(spec.depth_ratio > 0.0) || spec.lip_fraction < 0.0 {
        return bad("rim_sample_spacing and depth_ratio must be positive, lip_fraction >= 0".into());
    }
    let d = &spec.density;
    if d.per_hectare < 0.0 || !(d.min_diameter > 0.0) || d.max_diameter < d.min_diameter {
        return bad("crater density needs per_hectare >= 0 and 0 < min_diameter <= max_diameter".into());
    }
    let l = &spec.landmarks;
    if l.random_count > 0 && !(l.diameter > 0.0) {
        return bad("landmark diameter must be positive".into());
    }
    Ok(())
}

struct BaseWave {
    amp: f64,
    kx: f64,
    ky: f64,
    phase: f64,
}

/// Builds a deterministic crater field: a smooth base surface, the requested landmarks and a
/// background crater population, together with the matching DEM.
///
/// The field covers `[0, extent]` in both axes. Landmark craters never overlap each other or
/// any background crater.
pub fn generate_crater_field(seed: u64, extent: f64, spec: &FieldSpec) -> Result<(CraterMap, DemRaster)> {
    validate(extent, spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let waves: Vec<BaseWave> = (0..BASE_WAVES)
        .map(|_| {
            let theta = rng.gen_range(0.0..2.0 * PI);
            let wavelength = rng.gen_range(80.0..250.0);
            let k = 2.0 * PI / wavelength;
            BaseWave {
                amp: spec.base_relief / BASE_WAVES as f64,
                kx: k * theta.cos(),
                ky: k * theta.sin(),
                phase: rng.gen_range(0.0..2.0 * PI),
            }
        })
        .collect();

    let landmarks = place_landmarks(&mut rng, extent, spec)?;
    let background = place_background(&mut rng, extent, spec, &landmarks);

    let mut craters = landmarks;
    let first_bg = craters.len() as u32;
    craters.extend(background.into_iter().enumerate().map(|(i, mut c)| {
        c.id = first_bg + i as u32;
        c
    }));

    let dem = rasterize(extent, spec, &waves, &craters)?;
    let map = CraterMap::new(craters, spec.rim_sample_spacing)?;
    Ok((map, dem))
}

fn lip_radius(c: &Crater) -> f64 {
    c.radius() * (1.0 + LIP_EXTENT)
}

fn place_landmarks(rng: &mut ChaCha8Rng, extent: f64, spec: &FieldSpec) -> Result<Vec<Crater>> {
    let ls = &spec.landmarks;
    let mut out: Vec<Crater> = Vec::new();
    let clear = |c: &Crater, others: &[Crater]| {
        others
            .iter()
            .all(|o| (o.center - c.center).norm() >= lip_radius(o) + lip_radius(c) + ls.min_separation)
    };

    for (i, p) in ls.placements.iter().enumerate() {
        if !(p.diameter > 0.0) {
            return Err(Error::Placement(format!("landmark {i} has non-positive diameter")));
        }
        let c = Crater {
            id: out.len() as u32,
            center: Vector2::new(p.x, p.y),
            diameter: p.diameter,
            depth: spec.depth_ratio * p.diameter,
            is_landmark: true,
        };
        let r = lip_radius(&c);
        if p.x - r < 0.0 || p.y - r < 0.0 || p.x + r > extent || p.y + r > extent {
            return Err(Error::Placement(format!(
                "landmark {i} at ({}, {}) with diameter {} does not fit inside the {extent} m field",
                p.x, p.y, p.diameter
            )));
        }
        if !clear(&c, &out) {
            return Err(Error::Placement(format!(
                "landmark {i} violates the {} m minimum separation",
                ls.min_separation
            )));
        }
        out.push(c);
    }

    let depth = spec.depth_ratio * ls.diameter;
    let lo = ls.edge_margin.max(ls.diameter);
    let hi = extent - lo;
    for k in 0..ls.random_count {
        if hi <= lo {
            return Err(Error::Placement(format!(
                "extent {extent} m leaves no room for landmarks with edge margin {} m",
                ls.edge_margin
            )));
        }
        let mut placed = false;
        for _ in 0..PLACEMENT_ATTEMPTS {
            let c = Crater {
                id: out.len() as u32,
                center: Vector2::new(rng.gen_range(lo..hi), rng.gen_range(lo..hi)),
                diameter: ls.diameter,
                depth,
                is_landmark: true,
            };
            if clear(&c, &out) {
                out.push(c);
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(Error::Placement(format!(
                "could not place random landmark {} of {} in a {extent} m field with {} m separation",
                k + 1,
                ls.random_count,
                ls.min_separation
            )));
        }
    }
    Ok(out)
}

fn place_background(
    rng: &mut ChaCha8Rng,
    extent: f64,
    spec: &FieldSpec,
    landmarks: &[Crater],
) -> Vec<Crater> {
    let d = &spec.density;
    let count = (d.per_hectare * extent * extent / 1.0e4).round() as usize;
    let a = d.exponent;
    let (lo_t, hi_t) = (d.min_diameter.powf(-a), d.max_diameter.powf(-a));
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        for _ in 0..50 {
            let u: f64 = rng.gen();
            let diameter = if a > 0.0 && d.max_diameter > d.min_diameter {
                (lo_t - u * (lo_t - hi_t)).powf(-1.0 / a)
            } else {
                d.min_diameter
            };
            let reach = 0.5 * diameter * (1.0 + LIP_EXTENT);
            if extent <= 2.0 * reach {
                break;
            }
            let center = Vector2::new(
                rng.gen_range(reach..extent - reach),
                rng.gen_range(reach..extent - reach),
            );
            let ok = landmarks
                .iter()
                .all(|l| (l.center - center).norm() >= lip_radius(l) + reach + d.landmark_clearance);
            if ok {
                out.push(Crater {
                    id: 0,
                    center,
                    diameter,
                    depth: spec.depth_ratio * diameter,
                    is_landmark: false,
                });
                break;
            }
        }
    }
    out
}

fn rasterize(extent: f64, spec: &FieldSpec, waves: &[BaseWave], craters: &[Crater]) -> Result<DemRaster> {
    let res = spec.resolution;
    let n = (extent / res).round() as usize + 1;

    // sin(kx x + ky y + phase) split into per-column and per-row factors
    let mut cells = vec![0f32; n * n];
    let col_terms: Vec<Vec<(f64, f64)>> = waves
        .iter()
        .map(|w| (0..n).map(|i| (w.kx * i as f64 * res).sin_cos()).collect())
        .collect();
    for row in 0..n {
        let y = row as f64 * res;
        let row_terms: Vec<(f64, f64)> = waves.iter().map(|w| (w.ky * y + w.phase).sin_cos()).collect();
        let out = &mut cells[row * n..(row + 1) * n];
        for (col, z) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (wi, w) in waves.iter().enumerate() {
                let (sx, cx) = col_terms[wi][col];
                let (sy, cy) = row_terms[wi];
                acc += w.amp * (sx * cy + cx * sy);
            }
            *z = acc as f32;
        }
    }

    for c in craters {
        let reach = lip_radius(c);
        let c0 = (((c.center.x - reach) / res).floor().max(0.0)) as usize;
        let c1 = (((c.center.x + reach) / res).ceil() as usize).min(n - 1);
        let r0 = (((c.center.y - reach) / res).floor().max(0.0)) as usize;
        let r1 = (((c.center.y + reach) / res).ceil() as usize).min(n - 1);
        for row in r0..=r1 {
            let y = row as f64 * res;
            for col in c0..=c1 {
                let x = col as f64 * res;
                let rho = ((x - c.center.x).powi(2) + (y - c.center.y).powi(2)).sqrt();
                if rho < reach {
                    let k = row * n + col;
                    cells[k] = (cells[k] as f64 + crater_relief(c, spec.lip_fraction, rho)) as f32;
                }
            }
        }
    }

    DemRaster::new(res, Vector2::zeros(), n, n, cells)
}
