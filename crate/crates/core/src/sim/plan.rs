use nalgebra::Vector2;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::map::{Crater, CraterMap, LIP_EXTENT};
use crate::{Error, Pose2, Result};

/// Closest approach to a landmark rim on every trajectory type (m).
pub const PASS_DISTANCE: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrajectoryType {
    Straight,
    HalfSurvey,
    FullSurvey,
}

impl fmt::Display for TrajectoryType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TrajectoryType::Straight => "straight",
            TrajectoryType::HalfSurvey => "half_survey",
            TrajectoryType::FullSurvey => "full_survey",
        })
    }
}

impl FromStr for TrajectoryType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "straight" => Ok(TrajectoryType::Straight),
            "half_survey" | "half" => Ok(TrajectoryType::HalfSurvey),
            "full_survey" | "full" => Ok(TrajectoryType::FullSurvey),
            other => Err(Error::Config(format!(
                "unknown trajectory type {other:?} (expected straight, half_survey or full_survey)"
            ))),
        }
    }
}

/// Ordered rover poses. Every waypoint after the first is an observation stop.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPlan {
    pub waypoints: Vec<Pose2>,
    pub observation_stops: Vec<usize>,
    pub traj_type: TrajectoryType,
    pub landmark_ids: Vec<u32>,
}

impl TrajectoryPlan {
    /// Total path length (m).
    pub fn length(&self) -> f64 {
        self.waypoints
            .windows(2)
            .map(|w| (w[1].position() - w[0].position()).norm())
            .sum()
    }
}

/// Builds the route from `start` to `goal` past every landmark near the segment.
///
/// Landmarks whose center projects inside the segment and lies within `2 * (radius + PASS_DISTANCE)`
/// of the line are visited in order along the route. Straight plans bend only where needed to
/// keep `PASS_DISTANCE` from the rim. Half surveys leave the line at the point behind the
/// crater, arc 180 degrees around it at `radius + PASS_DISTANCE` through the side facing the line,
/// and rejoin ahead of it. Full surveys loop the whole circle from the closest-approach point.
/// Survey stops face the crater center; other stops face the direction of travel.
pub fn plan_trajectory(
    map: &CraterMap,
    start: Vector2<f64>,
    goal: Vector2<f64>,
    traj_type: TrajectoryType,
    stop_spacing: f64,
) -> Result<TrajectoryPlan> {
    if !(stop_spacing > 0.0) {
        return Err(Error::Planning(format!("stop spacing must be positive, got {stop_spacing}")));
    }
    let span = goal - start;
    let len = span.norm();
    if !(len > 0.0) {
        return Err(Error::Planning("start and goal coincide".into()));
    }
    let u = span / len;
    let normal = Vector2::new(-u.y, u.x);

    let mut targets: Vec<(f64, &Crater)> = map
        .landmarks()
        .filter_map(|c| {
            let rel = c.center - start;
            let along = rel.dot(&u);
            let across = rel.dot(&normal).abs();
            (along > 0.0 && along < len && across <= 2.0 * (c.radius() + PASS_DISTANCE)).then_some((along, c))
        })
        .collect();
    targets.sort_by(|a, b| a.0.total_cmp(&b.0));
    if targets.is_empty() {
        return Err(Error::Planning("no landmark craters between start and goal".into()));
    }
    check_clearance(map, &targets)?;

    let mut b = Builder::new(start, stop_spacing);
    for &(_, c) in &targets {
        let rho = c.radius() + PASS_DISTANCE;
        let rel = c.center - start;
        let side = if rel.dot(&normal) >= 0.0 { 1.0 } else { -1.0 };
        // point on the survey circle closest to the route line
        let pass = c.center - normal * (side * rho);
        let pass_angle = angle_of(pass - c.center);
        match traj_type {
            TrajectoryType::Straight => {
                let foot = start + u * rel.dot(&u);
                let off_line = (c.center - foot).norm();
                if off_line < rho {
                    b.line_to(pass, None);
                }
            }
            TrajectoryType::HalfSurvey => {
                let entry = c.center - u * rho;
                b.line_to(entry, None);
                // sweep from behind, through the line side, to ahead
                let a0 = angle_of(entry - c.center);
                let sweep = signed_sweep(a0, pass_angle) * 2.0;
                b.arc(c.center, rho, a0, sweep);
            }
            TrajectoryType::FullSurvey => {
                b.line_to(pass, None);
                let a0 = pass_angle;
                let dir = signed_sweep(angle_of(-u), a0).signum();
                b.arc(c.center, rho, a0, dir * 2.0 * PI);
            }
        }
    }
    b.line_to(goal, None);

    let landmark_ids = targets.iter().map(|(_, c)| c.id).collect();
    Ok(b.finish(traj_type, landmark_ids))
}

/// Survey circles must not cut through another crater's lip.
fn check_clearance(map: &CraterMap, targets: &[(f64, &Crater)]) -> Result<()> {
    for &(_, t) in targets {
        let rho = t.radius() + PASS_DISTANCE;
        for other in map.craters.iter().filter(|o| o.id != t.id) {
            let d = (other.center - t.center).norm();
            let reach = other.radius() * (1.0 + LIP_EXTENT);
            if (d - rho).abs() < reach {
                return Err(Error::Planning(format!(
                    "crater {} blocks the survey circle around landmark {}",
                    other.id, t.id
                )));
            }
        }
    }
    Ok(())
}

fn angle_of(v: Vector2<f64>) -> f64 {
    v.y.atan2(v.x)
}

/// Signed smallest rotation from angle `a` to angle `b`, in (-pi, pi].
fn signed_sweep(a: f64, b: f64) -> f64 {
    let mut d = (b - a) % (2.0 * PI);
    if d > PI {
        d -= 2.0 * PI;
    } else if d <= -PI {
        d += 2.0 * PI;
    }
    d
}

struct Builder {
    poses: Vec<Pose2>,
    spacing: f64,
}

impl Builder {
    fn new(start: Vector2<f64>, spacing: f64) -> Self {
        Self {
            poses: vec![Pose2::new(start.x, start.y, 0.0)],
            spacing,
        }
    }

    fn last(&self) -> Vector2<f64> {
        self.poses.last().unwrap().position()
    }

    /// Straight leg split into equal steps no longer than the stop spacing.
    fn line_to(&mut self, to: Vector2<f64>, heading: Option<f64>) {
        let from = self.last();
        let d = to - from;
        let len = d.norm();
        if len < 1e-9 {
            return;
        }
        let travel = angle_of(d);
        if self.poses.len() == 1 {
            self.poses[0].heading = travel;
        }
        let n = (len / self.spacing).ceil().max(1.0) as usize;
        for k in 1..=n {
            let p = from + d * (k as f64 / n as f64);
            self.poses.push(Pose2::new(p.x, p.y, heading.unwrap_or(travel)));
        }
    }

    /// Arc around `center`; stops are spaced evenly and face the center.
    fn arc(&mut self, center: Vector2<f64>, radius: f64, a0: f64, sweep: f64) {
        let n = ((radius * sweep.abs()) / self.spacing).ceil().max(1.0) as usize;
        for k in 1..=n {
            let a = a0 + sweep * k as f64 / n as f64;
            let p = center + Vector2::new(a.cos(), a.sin()) * radius;
            let facing = angle_of(center - p);
            self.poses.push(Pose2::new(p.x, p.y, facing));
        }
        // the entry stop also faces the center
        let entry = self.poses.len() - n - 1;
        let p = self.poses[entry].position();
        self.poses[entry].heading = angle_of(center - p);
    }

    fn finish(self, traj_type: TrajectoryType, landmark_ids: Vec<u32>) -> TrajectoryPlan {
        let observation_stops = (1..self.poses.len()).collect();
        TrajectoryPlan {
            waypoints: self.poses,
            observation_stops,
            traj_type,
            landmark_ids,
        }
    }
}
