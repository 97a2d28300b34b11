//! Crater-landmark global localization for rovers driving in darkness.
//!
//! The crate is split along the processing chain:
//!
//! - [`map`]: orbital crater map, synthetic DEM terrain, rim sampling and front-arc selection.
//! - [`camera`]: pinhole camera over the DEM, synthetic range images and far-range refinement.
//! - [`detect`]: crater leading-edge detection and detection-quality metrics (Q-Score, rim percent).
//! - [`filter`]: drifting odometry model and the log-domain particle filter.
//! - [`sim`]: trajectory synthesis, replays, Monte Carlo batches and the timing harness.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod camera;
pub mod detect;
mod error;
pub mod filter;
pub mod map;
pub mod sim;

pub use error::{Error, Result};

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

/// 2D position plus heading (radians, counter-clockwise from the world +x axis).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pose2 {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

impl Pose2 {
    pub fn new(x: f64, y: f64, heading: f64) -> Self {
        Self { x, y, heading }
    }

    pub fn position(&self) -> Vector2<f64> {
        Vector2::new(self.x, self.y)
    }

    /// Unit viewing direction in the world frame.
    pub fn direction(&self) -> Vector2<f64> {
        Vector2::new(self.heading.cos(), self.heading.sin())
    }

    /// Maps a ground-plane point from the rover frame (x forward, y left) into the world frame.
    pub fn rover_to_world(&self, p: Vector2<f64>) -> Vector2<f64> {
        rover_to_world_at(self.position(), self.heading, p)
    }
}

/// Same as [`Pose2::rover_to_world`] for a rover placed at `origin`.
#[inline]
pub fn rover_to_world_at(origin: Vector2<f64>, heading: f64, p: Vector2<f64>) -> Vector2<f64> {
    let (s, c) = heading.sin_cos();
    Vector2::new(origin.x + c * p.x - s * p.y, origin.y + s * p.x + c * p.y)
}
