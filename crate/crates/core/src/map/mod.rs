//! Orbital crater map and DEM terrain.

mod dem;
mod generate;
mod io;

pub use dem::DemRaster;
pub use generate::{
    crater_relief, generate_crater_field, CraterDensity, FieldSpec, LandmarkPlacement,
    LandmarkSpec, LIP_EXTENT,
};
pub use io::{
    dem_from_asc, dem_to_asc, map_from_json, map_to_json, read_dem_asc, read_map_json,
    write_dem_asc, write_map_json,
};

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::{Error, Pose2, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Crater {
    pub id: u32,
    pub center: Vector2<f64>,
    pub diameter: f64,
    pub depth: f64,
    pub is_landmark: bool,
}

impl Crater {
    pub fn radius(&self) -> f64 {
        0.5 * self.diameter
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CraterMap {
    pub craters: Vec<Crater>,
    pub rim_sample_spacing: f64,
}

impl CraterMap {
    pub fn new(craters: Vec<Crater>, rim_sample_spacing: f64) -> Result<Self> {
        if !(rim_sample_spacing > 0.0) {
            return Err(Error::Config(format!(
                "rim_sample_spacing must be positive, got {rim_sample_spacing}"
            )));
        }
        let mut ids: Vec<u32> = craters.iter().map(|c| c.id).collect();
        ids.sort_unstable();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Config(format!("duplicate crater id {}", w[0])));
        }
        for c in &craters {
            if !(c.diameter > 0.0) || !(c.depth > 0.0) {
                return Err(Error::Config(format!(
                    "crater {} needs positive diameter and depth",
                    c.id
                )));
            }
        }
        Ok(Self {
            craters,
            rim_sample_spacing,
        })
    }

    pub fn landmarks(&self) -> impl Iterator<Item = &Crater> {
        self.craters.iter().filter(|c| c.is_landmark)
    }

    pub fn crater(&self, id: u32) -> Option<&Crater> {
        self.craters.iter().find(|c| c.id == id)
    }
}

/// Ordered rim samples of one crater.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RimArc {
    pub crater_id: u32,
    pub center: Vector2<f64>,
    pub radius: f64,
    pub points: Vec<Vector2<f64>>,
}

/// Samples the full rim circle at (approximately) uniform arc-length spacing.
///
/// The point count is `round(pi * diameter / spacing)`; samples sit at half-step angular
/// offsets from east, so four samples land on the NE/NW/SW/SE quadrant bisectors.
pub fn sample_rim(crater: &Crater, spacing: f64) -> RimArc {
    let r = crater.radius();
    let n = ((PI * crater.diameter / spacing).round() as usize).max(1);
    let points = (0..n)
        .map(|k| {
            let a = 2.0 * PI * (k as f64 + 0.5) / n as f64;
            crater.center + Vector2::new(r * a.cos(), r * a.sin())
        })
        .collect();
    RimArc {
        crater_id: crater.id,
        center: crater.center,
        radius: r,
        points,
    }
}

/// True when the rim point at offset `rel` from the crater center faces a camera looking along `dir`.
///
/// Points exactly perpendicular to the view go to the side picked by the cross product so that
/// a heading and its reverse always split the rim into two disjoint halves.
#[inline]
fn faces_camera(rel: Vector2<f64>, dir: Vector2<f64>) -> bool {
    let dot = rel.dot(&dir);
    if dot != 0.0 {
        dot < 0.0
    } else {
        dir.x * rel.y - dir.y * rel.x > 0.0
    }
}

/// The half of the rim whose outward normal makes an angle of at least 90 degrees with the
/// viewing direction.
pub fn front_arc(rim: &RimArc, camera_pose: &Pose2) -> RimArc {
    let dir = camera_pose.direction();
    RimArc {
        crater_id: rim.crater_id,
        center: rim.center,
        radius: rim.radius,
        points: rim
            .points
            .iter()
            .copied()
            .filter(|p| faces_camera(p - rim.center, dir))
            .collect(),
    }
}

/// Front arcs of every landmark for one viewing heading, ready for nearest-point queries.
#[derive(Clone, Debug)]
pub struct FrontArcs {
    arcs: Vec<RimArc>,
}

impl FrontArcs {
    pub fn new(map: &CraterMap, heading: f64) -> Result<Self> {
        let pose = Pose2::new(0.0, 0.0, heading);
        let arcs: Vec<RimArc> = map
            .landmarks()
            .map(|c| front_arc(&sample_rim(c, map.rim_sample_spacing), &pose))
            .filter(|a| !a.points.is_empty())
            .collect();
        if arcs.is_empty() {
            return Err(Error::Config("crater map has no landmark craters".into()));
        }
        Ok(Self { arcs })
    }

    pub fn arcs(&self) -> &[RimArc] {
        &self.arcs
    }

    /// Distance from `p` to the closest front-arc sample over all landmarks.
    ///
    /// The arc whose circle is closest is searched first; any other arc whose circle-based
    /// lower bound cannot beat the running best is skipped. The result equals the exhaustive
    /// minimum.
    pub fn nearest_distance(&self, p: Vector2<f64>) -> f64 {
        let bound = |a: &RimArc| ((p - a.center).norm() - a.radius).abs();
        let first = self
            .arcs
            .iter()
            .enumerate()
            .map(|(i, a)| (bound(a), i))
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .map(|(_, i)| i)
            .unwrap_or(0);
        let mut best_sq = nearest_in_arc(&self.arcs[first], p, f64::INFINITY);
        for (i, a) in self.arcs.iter().enumerate() {
            if i == first {
                continue;
            }
            let lb = bound(a);
            if lb * lb < best_sq {
                best_sq = nearest_in_arc(a, p, best_sq);
            }
        }
        best_sq.sqrt()
    }
}

#[inline]
fn nearest_in_arc(arc: &RimArc, p: Vector2<f64>, mut best_sq: f64) -> f64 {
    for q in &arc.points {
        let dx = q.x - p.x;
        let dy = q.y - p.y;
        let d = dx * dx + dy * dy;
        if d < best_sq {
            best_sq = d;
        }
    }
    best_sq
}

/// Euclidean distance from `p` to the closest front-arc ground-truth point over all landmarks.
pub fn nearest_rim_distance(map: &CraterMap, p: Vector2<f64>, camera_pose: &Pose2) -> Result<f64> {
    Ok(FrontArcs::new(map, camera_pose.heading)?.nearest_distance(p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn crater(id: u32, x: f64, y: f64, d: f64) -> Crater {
        Crater {
            id,
            center: Vector2::new(x, y),
            diameter: d,
            depth: 0.1 * d,
            is_landmark: true,
        }
    }

    #[test]
    fn four_point_rim_sits_on_quadrants() {
        let c = crater(0, 0.0, 0.0, 10.0);
        let rim = sample_rim(&c, PI * 10.0 / 4.0);
        assert_eq!(rim.points.len(), 4);
        let h = 5.0 / 2f64.sqrt();
        let expected = [(h, h), (-h, h), (-h, -h), (h, -h)];
        for (p, e) in rim.points.iter().zip(expected) {
            assert_relative_eq!(p.x, e.0, epsilon = 1e-12);
            assert_relative_eq!(p.y, e.1, epsilon = 1e-12);
        }
    }

    #[test]
    fn rim_count_and_radius() {
        let c = crater(0, 3.0, -2.0, 15.0);
        let rim = sample_rim(&c, 0.25);
        assert_eq!(rim.points.len(), (PI * 15.0 / 0.25).round() as usize);
        for p in &rim.points {
            assert_relative_eq!((p - c.center).norm(), 7.5, epsilon = 1e-12);
        }
    }

    #[test]
    fn front_arc_from_south_is_southern_half() {
        let c = crater(0, 0.0, 0.0, 20.0);
        let rim = sample_rim(&c, 0.25);
        let pose = Pose2::new(0.0, -30.0, PI / 2.0);
        let front = front_arc(&rim, &pose);
        assert_eq!(front.points.len(), rim.points.len() / 2);
        assert!(front.points.iter().all(|p| p.y < 0.0));
    }

    #[test]
    fn four_point_rim_camera_east_keeps_eastern_pair() {
        let c = crater(0, 0.0, 0.0, 10.0);
        let rim = sample_rim(&c, PI * 10.0 / 4.0);
        let front = front_arc(&rim, &Pose2::new(20.0, 0.0, PI));
        assert_eq!(front.points.len(), 2);
        assert!(front.points.iter().all(|p| p.x > 0.0));
    }

    #[test]
    fn nearest_distance_basics() {
        let map = CraterMap::new(vec![crater(0, 0.0, 0.0, 10.0)], 0.01).unwrap();
        let pose = Pose2::new(0.0, -20.0, PI / 2.0);
        let arcs = FrontArcs::new(&map, pose.heading).unwrap();
        let on = arcs.arcs()[0].points[10];
        assert_eq!(nearest_rim_distance(&map, on, &pose).unwrap(), 0.0);
        let d = nearest_rim_distance(&map, Vector2::zeros(), &pose).unwrap();
        assert_relative_eq!(d, 5.0, epsilon = 1e-9);
    }

    #[test]
    fn nearest_distance_takes_min_over_craters() {
        let map = CraterMap::new(
            vec![crater(0, 0.0, 0.0, 10.0), crater(1, 40.0, 0.0, 10.0)],
            0.05,
        )
        .unwrap();
        let pose = Pose2::new(20.0, -30.0, PI / 2.0);
        let p = Vector2::new(22.0, -3.0);
        let single = |c: &Crater| {
            let m = CraterMap::new(vec![c.clone()], 0.05).unwrap();
            nearest_rim_distance(&m, p, &pose).unwrap()
        };
        let expected = single(&map.craters[0]).min(single(&map.craters[1]));
        assert_eq!(nearest_rim_distance(&map, p, &pose).unwrap(), expected);
    }

    #[test]
    fn empty_landmark_set_is_a_config_error() {
        let mut c = crater(0, 0.0, 0.0, 10.0);
        c.is_landmark = false;
        let map = CraterMap::new(vec![c], 0.25).unwrap();
        let err = nearest_rim_distance(&map, Vector2::zeros(), &Pose2::new(0.0, 0.0, 0.0));
        assert!(matches!(err, Err(Error::Config(_))));
    }

    #[test]
    fn duplicate_ids_rejected() {
        let r = CraterMap::new(vec![crater(3, 0.0, 0.0, 5.0), crater(3, 9.0, 0.0, 5.0)], 0.25);
        assert!(r.is_err());
    }

    proptest! {
        #[test]
        fn front_halves_partition_rim(heading in -10.0f64..10.0, d in 2.0f64..40.0, spacing in 0.1f64..2.0) {
            let c = crater(0, 1.0, 2.0, d);
            let rim = sample_rim(&c, spacing);
            let a = front_arc(&rim, &Pose2::new(0.0, 0.0, heading));
            let b = front_arc(&rim, &Pose2::new(0.0, 0.0, heading + PI));
            prop_assert_eq!(a.points.len() + b.points.len(), rim.points.len());
            for p in &a.points {
                prop_assert!(!b.points.contains(p));
            }
        }

        #[test]
        fn nearest_distance_is_one_lipschitz(
            px in -30.0f64..30.0, py in -30.0f64..30.0,
            dx in -2.0f64..2.0, dy in -2.0f64..2.0, heading in 0.0f64..6.3,
        ) {
            let map = CraterMap::new(
                vec![crater(0, 0.0, 0.0, 12.0), crater(1, 15.0, 5.0, 8.0)],
                0.25,
            ).unwrap();
            let arcs = FrontArcs::new(&map, heading).unwrap();
            let p = Vector2::new(px, py);
            let q = p + Vector2::new(dx, dy);
            let delta = (arcs.nearest_distance(p) - arcs.nearest_distance(q)).abs();
            prop_assert!(delta <= (q - p).norm() + 1e-9);
        }

        #[test]
        fn pruned_nearest_matches_exhaustive(px in -40.0f64..60.0, py in -40.0f64..40.0, heading in 0.0f64..6.3) {
            let map = CraterMap::new(
                vec![crater(0, 0.0, 0.0, 12.0), crater(1, 15.0, 5.0, 8.0), crater(2, 30.0, -10.0, 20.0)],
                0.25,
            ).unwrap();
            let arcs = FrontArcs::new(&map, heading).unwrap();
            let p = Vector2::new(px, py);
            let brute = arcs.arcs().iter()
                .flat_map(|a| a.points.iter())
                .map(|q| (q - p).norm())
                .fold(f64::INFINITY, f64::min);
            prop_assert!((arcs.nearest_distance(p) - brute).abs() < 1e-12);
        }
    }
}
