//! Synthetic stand-in for the physical setup: parametric objects, protocol
//! poses, top-down depth rendering and sensor noise.

mod catalog;
mod marching;
mod noise;
mod object;
mod primitive;
mod render;

use std::f64::consts::PI;

use thiserror::Error;

use crate::domain::{CameraModel, DepthImage, PointCloud};

pub use catalog::{default_catalog, default_grippers, default_noise_profiles, OBJECT_NAMES};
pub use noise::{apply_noise, NoiseProfile};
pub use object::{ChordInterval, CrossSection, ObjectModel, ObjectSpec, PlacedObject, ScenePose};
pub use primitive::Primitive;
pub use render::{render_depth, render_table};

#[allow(unused_imports)]
pub(crate) use marching::signed_area;
#[allow(unused_imports)]
pub(crate) use primitive::polygon_sdf;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SceneError {
    #[error("object {name}: {reason}")]
    InvalidObject { name: String, reason: String },
    #[error("invalid noise profile: {0}")]
    InvalidNoise(String),
    #[error("pose outside the workspace: ({x}, {y})")]
    PoseOutsideWorkspace { x: f64, y: f64 },
}

/// Bearings of the three protocol positions on the placement circle.
pub const PROTOCOL_BEARINGS_DEG: [f64; 3] = [90.0, 210.0, 330.0];

pub const DEFAULT_PROTOCOL_RADIUS: f64 = 0.25;
pub const DEFAULT_PROTOCOL_THETA: f64 = PI / 2.0;

/// The six protocol placements P1..P6 on a circle of radius `r`.
///
/// Positions A, B, C sit at the bearings in [`PROTOCOL_BEARINGS_DEG`]; the
/// order is A·0, B·0, A·θ, C·0, B·θ, C·θ, so P4 and P6 share a position.
pub fn protocol_poses(r: f64, theta: f64) -> [ScenePose; 6] {
    protocol_poses_with(r, theta, PROTOCOL_BEARINGS_DEG)
}

pub fn protocol_poses_with(r: f64, theta: f64, bearings_deg: [f64; 3]) -> [ScenePose; 6] {
    let at = |k: usize, yaw: f64| {
        let b = bearings_deg[k].to_radians();
        ScenePose::new(r * b.cos(), r * b.sin(), yaw)
    };
    [
        at(0, 0.0),
        at(1, 0.0),
        at(0, theta),
        at(2, 0.0),
        at(1, theta),
        at(2, theta),
    ]
}

/// Back-projects every valid pixel into the table frame, row-major order.
pub fn depth_to_cloud(depth: &DepthImage, camera: &CameraModel) -> PointCloud {
    let w = depth.width();
    let points = depth
        .data()
        .iter()
        .enumerate()
        .filter(|(_, d)| crate::domain::is_valid_depth(**d))
        .map(|(i, &d)| camera.back_project((i % w) as f64, (i / w) as f64, d as f64))
        .collect();
    PointCloud::new(points)
}
