//! Shared value types: depth images, camera intrinsics, point clouds, grasps,
//! gripper descriptions and the planner contract.

use std::cmp::Ordering;
use std::f64::consts::PI;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Reserved marker for pixels without a depth reading.
pub const INVALID_DEPTH: f32 = f32::NAN;

/// Largest depth reading accepted as valid, in meters.
pub const MAX_VALID_DEPTH: f32 = 10.0;

/// True when `d` is a usable depth reading.
#[inline]
pub fn is_valid_depth(d: f32) -> bool {
    d.is_finite() && d > 0.0 && d <= MAX_VALID_DEPTH
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DomainError {
    #[error("depth buffer holds {actual} values, expected {expected}")]
    SizeMismatch { expected: usize, actual: usize },
    #[error("pixel {index} holds out-of-range depth {value}")]
    OutOfRange { index: usize, value: f32 },
    #[error("invalid camera: {0}")]
    Camera(String),
    #[error("invalid gripper: {0}")]
    Gripper(String),
    #[error("invalid grasp: {0}")]
    Grasp(String),
}

/// Row-major metric depth image. Invalid pixels hold a non-finite value.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthImage {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl DepthImage {
    pub fn new(width: usize, height: usize, data: Vec<f32>) -> Result<Self, DomainError> {
        let expected = width * height;
        if data.len() != expected {
            return Err(DomainError::SizeMismatch {
                expected,
                actual: data.len(),
            });
        }
        if let Some((index, &value)) = data
            .iter()
            .enumerate()
            .find(|(_, d)| d.is_finite() && !is_valid_depth(**d))
        {
            return Err(DomainError::OutOfRange { index, value });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: f32) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    /// Builds an image while mapping any out-of-range reading to invalid.
    pub(crate) fn from_raw_lossy(width: usize, height: usize, mut data: Vec<f32>) -> Self {
        debug_assert_eq!(data.len(), width * height);
        for d in &mut data {
            if !is_valid_depth(*d) {
                *d = INVALID_DEPTH;
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> f32 {
        self.data[v * self.width + u]
    }

    pub fn is_valid_at(&self, u: usize, v: usize) -> bool {
        is_valid_depth(self.get(u, v))
    }

    pub fn invalid_count(&self) -> usize {
        self.data.iter().filter(|d| !is_valid_depth(**d)).count()
    }

    /// Raw bit patterns; NaN payloads included. Used for byte-level comparisons.
    pub fn to_bits(&self) -> Vec<u32> {
        self.data.iter().map(|d| d.to_bits()).collect()
    }
}

/// Pinhole intrinsics of the top-down camera plus its distance to the table.
///
/// Image columns run along table +x and rows along table +y, so a table
/// point `(x, y, z)` lands on pixel `(cx + fx·x/(s−z), cy + fy·y/(s−z))`
/// where `s` is the standoff.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraModel {
    pub width: usize,
    pub height: usize,
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    #[serde(rename = "standoff_m")]
    pub standoff: f64,
}

impl Default for CameraModel {
    fn default() -> Self {
        Self {
            width: 640,
            height: 480,
            fx: 500.0,
            fy: 500.0,
            cx: 320.0,
            cy: 240.0,
            standoff: 0.8,
        }
    }
}

impl CameraModel {
    pub fn validate(&self) -> Result<(), DomainError> {
        if !(self.fx > 0.0 && self.fy > 0.0) {
            return Err(DomainError::Camera("focal lengths must be positive".into()));
        }
        if !(self.cx >= 0.0 && self.cx < self.width as f64) {
            return Err(DomainError::Camera(format!(
                "cx {} outside [0, {})",
                self.cx, self.width
            )));
        }
        if !(self.cy >= 0.0 && self.cy < self.height as f64) {
            return Err(DomainError::Camera(format!(
                "cy {} outside [0, {})",
                self.cy, self.height
            )));
        }
        if !(self.standoff > 0.0 && self.standoff as f32 <= MAX_VALID_DEPTH) {
            return Err(DomainError::Camera("standoff must be in (0, 10] m".into()));
        }
        Ok(())
    }

    /// Table-frame point seen at pixel `(u, v)` with depth `depth`.
    #[inline]
    pub fn back_project(&self, u: f64, v: f64, depth: f64) -> Vector3<f64> {
        Vector3::new(
            (u - self.cx) * depth / self.fx,
            (v - self.cy) * depth / self.fy,
            self.standoff - depth,
        )
    }

    /// Continuous pixel coordinates of a table-frame point.
    #[inline]
    pub fn project(&self, p: &Vector3<f64>) -> (f64, f64) {
        let depth = self.standoff - p.z;
        (
            self.cx + self.fx * p.x / depth,
            self.cy + self.fy * p.y / depth,
        )
    }

    /// Metric size of one pixel on the table plane.
    pub fn meters_per_pixel(&self) -> f64 {
        self.standoff / self.fx
    }
}

/// Points in the table frame: z = 0 on the table, z up.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointCloud {
    pub points: Vec<Vector3<f64>>,
}

impl PointCloud {
    pub fn new(points: Vec<Vector3<f64>>) -> Self {
        debug_assert!(points.iter().all(|p| p.iter().all(|c| c.is_finite())));
        Self { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Vector3<f64>> {
        self.points.iter()
    }

    pub fn max_z(&self) -> Option<f64> {
        self.points.iter().map(|p| p.z).reduce(f64::max)
    }
}

impl FromIterator<Vector3<f64>> for PointCloud {
    fn from_iter<I: IntoIterator<Item = Vector3<f64>>>(iter: I) -> Self {
        Self {
            points: iter.into_iter().collect(),
        }
    }
}

/// Folds an angle into `[0, π)`. A parallel-jaw grasp rotated by π is the
/// same physical grasp.
pub fn normalize_angle(angle: f64) -> f64 {
    let a = angle.rem_euclid(PI);
    if a >= PI || a.is_nan() {
        0.0
    } else {
        a
    }
}

/// Planar top-down parallel-jaw grasp in the table frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grasp {
    #[serde(rename = "x_m")]
    pub x: f64,
    #[serde(rename = "y_m")]
    pub y: f64,
    #[serde(rename = "z_m")]
    pub z: f64,
    /// Direction of the closing axis, in `[0, π)`.
    #[serde(rename = "angle_rad")]
    pub angle: f64,
    /// Commanded opening.
    #[serde(rename = "width_m")]
    pub width: f64,
    pub quality: f64,
}

impl Grasp {
    pub fn new(x: f64, y: f64, z: f64, angle: f64, width: f64, quality: f64) -> Self {
        Self {
            x,
            y,
            z,
            angle: normalize_angle(angle),
            width,
            quality,
        }
    }

    /// Unit vector of the closing axis in the table plane.
    pub fn axis(&self) -> (f64, f64) {
        (self.angle.cos(), self.angle.sin())
    }

    pub fn validate(&self, gripper: &GripperSpec) -> Result<(), DomainError> {
        let fields = [self.x, self.y, self.z, self.angle, self.width, self.quality];
        if fields.iter().any(|v| !v.is_finite()) {
            return Err(DomainError::Grasp("non-finite field".into()));
        }
        if !(0.0..PI).contains(&self.angle) {
            return Err(DomainError::Grasp(format!(
                "angle {} outside [0, π)",
                self.angle
            )));
        }
        if !(self.width > 0.0 && self.width <= gripper.max_opening + 1e-12) {
            return Err(DomainError::Grasp(format!(
                "width {} outside (0, {}]",
                self.width, gripper.max_opening
            )));
        }
        if self.z < 0.0 {
            return Err(DomainError::Grasp(format!("z {} below the table", self.z)));
        }
        Ok(())
    }

    /// Deterministic order among equally good grasps: lowest
    /// `(angle, y, x)` first.
    pub fn tie_order(&self, other: &Grasp) -> Ordering {
        self.angle
            .total_cmp(&other.angle)
            .then(self.y.total_cmp(&other.y))
            .then(self.x.total_cmp(&other.x))
    }
}

/// Parallel-jaw gripper geometry and force limits.
///
/// The two presets are configuration defaults; the controlled contrast
/// between them is the finger contact area.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GripperSpec {
    #[serde(rename = "max_opening_m")]
    pub max_opening: f64,
    #[serde(rename = "min_opening_m")]
    pub min_opening: f64,
    #[serde(rename = "max_force_n")]
    pub max_force: f64,
    /// Finger extent across the closing axis.
    #[serde(rename = "finger_width_m")]
    pub finger_width: f64,
    /// Finger extent along the closing axis.
    #[serde(rename = "finger_thickness_m")]
    pub finger_thickness: f64,
    #[serde(rename = "contact_patch_radius_m")]
    pub contact_patch_radius: f64,
}

impl GripperSpec {
    pub fn franka_like() -> Self {
        Self {
            max_opening: 0.08,
            min_opening: 0.0,
            max_force: 70.0,
            finger_width: 0.018,
            finger_thickness: 0.010,
            contact_patch_radius: 0.005,
        }
    }

    pub fn robotiq_like() -> Self {
        Self {
            max_opening: 0.085,
            min_opening: 0.0,
            max_force: 100.0,
            finger_width: 0.030,
            finger_thickness: 0.012,
            contact_patch_radius: 0.0065,
        }
    }

    pub fn validate(&self) -> Result<(), DomainError> {
        if !(self.min_opening >= 0.0 && self.min_opening < self.max_opening) {
            return Err(DomainError::Gripper(
                "need 0 <= min_opening < max_opening".into(),
            ));
        }
        if !(self.max_force > 0.0) {
            return Err(DomainError::Gripper("max_force must be positive".into()));
        }
        if !(self.finger_width > 0.0 && self.finger_thickness > 0.0) {
            return Err(DomainError::Gripper(
                "finger dimensions must be positive".into(),
            ));
        }
        if !(self.contact_patch_radius >= 0.0) {
            return Err(DomainError::Gripper("patch radius must be >= 0".into()));
        }
        Ok(())
    }
}

/// What a planner sees after preprocessing.
#[derive(Debug, Clone)]
pub struct Observation {
    /// Hole-free depth image, pixels outside the region of interest reset to
    /// the table.
    pub depth: DepthImage,
    /// Object points: region-filtered, downsampled, table removed.
    pub cloud: PointCloud,
    pub camera: CameraModel,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanError {
    #[error("no grasp found: {0}")]
    NoGraspFound(String),
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("planner timed out after {0:?}")]
    Timeout(std::time::Duration),
    #[error("remote planner failed: {0}")]
    RemoteFailure(String),
    #[error("planner i/o: {0}")]
    Io(String),
}

impl PlanError {
    /// Short stable label used in experiment records.
    pub fn kind(&self) -> &'static str {
        match self {
            PlanError::NoGraspFound(_) => "NoGraspFound",
            PlanError::Protocol(_) => "ProtocolError",
            PlanError::Timeout(_) => "Timeout",
            PlanError::RemoteFailure(_) => "RemoteFailure",
            PlanError::Io(_) => "IoError",
        }
    }
}

/// A grasp synthesis algorithm. Implementations must be deterministic:
/// identical observations and gripper give an identical grasp.
pub trait Planner: Send + Sync {
    fn name(&self) -> &str;
    fn plan(&self, observation: &Observation, gripper: &GripperSpec) -> Result<Grasp, PlanError>;
}
