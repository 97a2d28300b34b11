use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use super::plan::{TrajectoryPlan, TrajectoryType, PASS_DISTANCE};
use crate::map::{generate_crater_field, CraterMap, DemRaster, FieldSpec, LandmarkPlacement};
use crate::{Pose2, Result};

/// A square field with a straight route and landmarks placed beside it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSpec {
    pub extent: f64,
    pub start: [f64; 2],
    pub goal: [f64; 2],
    /// `[distance along the route, offset to the left of it]` per landmark center (m).
    pub landmarks: Vec<[f64; 2]>,
    pub landmark_diameter: f64,
    pub field: FieldSpec,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        let offset = 7.5 + PASS_DISTANCE;
        Self {
            extent: 640.0,
            start: [20.0, 320.0],
            goal: [620.0, 320.0],
            landmarks: vec![[310.0, offset], [540.0, -offset]],
            landmark_diameter: 15.0,
            field: FieldSpec::default(),
        }
    }
}

impl ScenarioSpec {
    /// Same field and route without any landmark craters.
    pub fn without_landmarks(&self) -> Self {
        Self {
            landmarks: Vec::new(),
            ..self.clone()
        }
    }

    pub fn build(&self, seed: u64) -> Result<Scenario> {
        let start = Vector2::new(self.start[0], self.start[1]);
        let goal = Vector2::new(self.goal[0], self.goal[1]);
        let u = (goal - start).normalize();
        let left = Vector2::new(-u.y, u.x);
        let mut field = self.field.clone();
        field.landmarks.random_count = 0;
        field.landmarks.placements = self
            .landmarks
            .iter()
            .map(|&[along, off]| {
                let c = start + u * along + left * off;
                LandmarkPlacement {
                    x: c.x,
                    y: c.y,
                    diameter: self.landmark_diameter,
                }
            })
            .collect();
        let (map, dem) = generate_crater_field(seed, self.extent, &field)?;
        Ok(Scenario { map, dem, start, goal })
    }
}

#[derive(Clone, Debug)]
pub struct Scenario {
    pub map: CraterMap,
    pub dem: DemRaster,
    pub start: Vector2<f64>,
    pub goal: Vector2<f64>,
}

impl Scenario {
    pub fn plan(&self, traj_type: TrajectoryType, stop_spacing: f64) -> Result<TrajectoryPlan> {
        super::plan_trajectory(&self.map, self.start, self.goal, traj_type, stop_spacing)
    }

    /// Straight start-to-goal route that ignores landmarks (dead-reckoning control).
    pub fn straight_line_plan(&self, stop_spacing: f64) -> TrajectoryPlan {
        let d = self.goal - self.start;
        let n = (d.norm() / stop_spacing).ceil().max(1.0) as usize;
        let heading = d.y.atan2(d.x);
        let waypoints = (0..=n)
            .map(|k| {
                let p = self.start + d * (k as f64 / n as f64);
                Pose2::new(p.x, p.y, heading)
            })
            .collect();
        TrajectoryPlan {
            waypoints,
            observation_stops: (1..=n).collect(),
            traj_type: TrajectoryType::Straight,
            landmark_ids: Vec::new(),
        }
    }
}

/// One landmark crater on a flat plain, for perception tests and range sweeps.
#[derive(Clone, Debug)]
pub struct CraterScene {
    pub map: CraterMap,
    pub dem: DemRaster,
    pub center: Vector2<f64>,
    pub radius: f64,
}

impl CraterScene {
    /// Camera west of the crater, looking at its center, `range` metres from the near rim.
    pub fn view_pose(&self, range: f64) -> Pose2 {
        Pose2::new(self.center.x - self.radius - range, self.center.y, 0.0)
    }
}

pub fn single_crater_scene(diameter: f64) -> Result<CraterScene> {
    let extent = 2.0 * (diameter + 60.0);
    let c = extent / 2.0;
    let mut field = FieldSpec {
        base_relief: 0.0,
        ..FieldSpec::default()
    };
    field.density.per_hectare = 0.0;
    field.landmarks.random_count = 0;
    field.landmarks.placements = vec![LandmarkPlacement { x: c, y: c, diameter }];
    let (map, dem) = generate_crater_field(0, extent, &field)?;
    Ok(CraterScene {
        map,
        dem,
        center: Vector2::new(c, c),
        radius: diameter / 2.0,
    })
}
