//! Input enhancement: depth completion, ROI filtering, voxel downsampling,
//! dominant-plane removal and object segmentation.

mod cloud;
mod complete;
mod plane;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{CameraModel, DepthImage, Observation};
use crate::scene::depth_to_cloud;

pub use cloud::{downsample, largest_cluster, roi_filter, RoiBox};
pub use complete::complete_depth;
pub use plane::{fit_plane, remove_plane, remove_plane_with, Plane, RansacParams};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PreprocessError {
    #[error("depth image has no valid pixel")]
    AllInvalid,
    #[error("point cloud is empty")]
    EmptyCloud,
    #[error("no plane: best support {best} of {total} points")]
    NoPlane { best: usize, total: usize },
    #[error("invalid ROI {0:?}")]
    InvalidRoi(RoiBox),
    #[error("voxel size {0} must be positive")]
    InvalidVoxel(f64),
}

impl PreprocessError {
    pub fn kind(&self) -> &'static str {
        match self {
            PreprocessError::AllInvalid => "AllInvalid",
            PreprocessError::EmptyCloud => "EmptyCloud",
            PreprocessError::NoPlane { .. } => "NoPlane",
            PreprocessError::InvalidRoi(_) => "InvalidRoi",
            PreprocessError::InvalidVoxel(_) => "InvalidVoxel",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PreprocessConfig {
    pub plane_tol_m: f64,
    pub voxel_m: f64,
    /// Neighbour radius of the object segmentation; 0 disables it.
    pub cluster_radius_m: f64,
    pub roi: RoiBox,
    pub ransac: RansacParams,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            plane_tol_m: 0.005,
            voxel_m: 0.004,
            cluster_radius_m: 0.025,
            roi: RoiBox::default(),
            ransac: RansacParams::default(),
        }
    }
}

/// Full chain from a raw depth frame to a planner observation.
///
/// The returned depth is hole-filled with pixels outside the ROI reset to the
/// table; the cloud holds the segmented object points only.
pub fn prepare(
    depth: &DepthImage,
    camera: &CameraModel,
    cfg: &PreprocessConfig,
) -> Result<Observation, PreprocessError> {
    cfg.roi.validate()?;
    let completed = complete_depth(depth)?;
    let w = completed.width();
    let s = camera.standoff as f32;
    let masked: Vec<f32> = completed
        .data()
        .iter()
        .enumerate()
        .map(|(i, &d)| {
            let p = camera.back_project((i % w) as f64, (i / w) as f64, d as f64);
            if cfg.roi.contains(p.x, p.y) {
                d
            } else {
                s
            }
        })
        .collect();
    let depth = DepthImage::new(w, completed.height(), masked).expect("valid depths");

    let full = roi_filter(&depth_to_cloud(&depth, camera), &cfg.roi);
    let reduced = downsample(&full, cfg.voxel_m)?;
    let (above, _) = remove_plane_with(&reduced, cfg.plane_tol_m, &cfg.ransac)?;
    let cloud = if cfg.cluster_radius_m > 0.0 {
        largest_cluster(&above, cfg.cluster_radius_m)
    } else {
        above
    };
    Ok(Observation {
        depth,
        cloud,
        camera: *camera,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{
        apply_noise, default_catalog, render_depth, render_table, NoiseProfile, ScenePose,
    };

    #[test]
    fn empty_table_gives_empty_cloud() {
        let cam = CameraModel::default();
        let obs = prepare(&render_table(&cam), &cam, &PreprocessConfig::default()).unwrap();
        assert!(obs.cloud.is_empty());
    }

    #[test]
    fn object_points_survive_noisy_preprocessing() {
        let cam = CameraModel::default();
        let cat = default_catalog();
        let ball = &cat[0];
        let pose = ScenePose::new(0.1, 0.05, 0.0);
        let depth = apply_noise(
            &render_depth(ball, pose, &cam),
            &NoiseProfile::new(0.001, 0.02, 0, 3),
        );
        let obs = prepare(&depth, &cam, &PreprocessConfig::default()).unwrap();
        assert_eq!(obs.depth.invalid_count(), 0);
        assert!(!obs.cloud.is_empty());
        for p in obs.cloud.iter() {
            assert!(((p.x - 0.1).powi(2) + (p.y - 0.05).powi(2)).sqrt() < 0.045);
        }
        let top = obs.cloud.max_z().unwrap();
        assert!((top - 0.067).abs() < 0.004, "top {top}");
    }
}
