use std::collections::{BTreeMap, HashMap};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::PreprocessError;
use crate::domain::PointCloud;

type V3 = Vector3<f64>;

/// Axis-aligned region of interest on the table plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoiBox {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Default for RoiBox {
    /// The workspace square `[-0.4, 0.4]²`.
    fn default() -> Self {
        Self::new(-0.4, 0.4, -0.4, 0.4).expect("valid default")
    }
}

impl RoiBox {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Result<Self, PreprocessError> {
        let roi = Self {
            x_min,
            x_max,
            y_min,
            y_max,
        };
        roi.validate()?;
        Ok(roi)
    }

    pub fn validate(&self) -> Result<(), PreprocessError> {
        if self.x_min < self.x_max && self.y_min < self.y_max {
            Ok(())
        } else {
            Err(PreprocessError::InvalidRoi(*self))
        }
    }

    #[inline]
    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x_min && x <= self.x_max && y >= self.y_min && y <= self.y_max
    }
}

/// Keeps the points whose (x, y) lies inside `roi`, preserving order.
pub fn roi_filter(cloud: &PointCloud, roi: &RoiBox) -> PointCloud {
    cloud
        .iter()
        .filter(|p| roi.contains(p.x, p.y))
        .copied()
        .collect()
}

fn voxel_of(p: &V3, voxel: f64) -> (i64, i64, i64) {
    (
        (p.x / voxel).floor() as i64,
        (p.y / voxel).floor() as i64,
        (p.z / voxel).floor() as i64,
    )
}

/// One centroid per occupied voxel of edge `voxel`, ordered by voxel index
/// `(ix, iy, iz)`.
pub fn downsample(cloud: &PointCloud, voxel: f64) -> Result<PointCloud, PreprocessError> {
    if !(voxel > 0.0 && voxel.is_finite()) {
        return Err(PreprocessError::InvalidVoxel(voxel));
    }
    let mut cells: BTreeMap<(i64, i64, i64), (V3, usize)> = BTreeMap::new();
    for p in cloud.iter() {
        let e = cells.entry(voxel_of(p, voxel)).or_insert((V3::zeros(), 0));
        e.0 += p;
        e.1 += 1;
    }
    Ok(cells.into_values().map(|(s, n)| s / n as f64).collect())
}

/// Largest connected component where points closer than `radius` are
/// linked. Ties go to the component containing the earliest point; output
/// keeps input order.
pub fn largest_cluster(cloud: &PointCloud, radius: f64) -> PointCloud {
    let pts = &cloud.points;
    if pts.is_empty() {
        return PointCloud::default();
    }
    let cell = |p: &V3| voxel_of(p, radius);
    let mut grid: HashMap<(i64, i64, i64), Vec<usize>> = HashMap::new();
    for (i, p) in pts.iter().enumerate() {
        grid.entry(cell(p)).or_default().push(i);
    }
    let r2 = radius * radius;
    let mut label = vec![usize::MAX; pts.len()];
    let mut sizes = Vec::new();
    let mut stack = Vec::new();
    for seed in 0..pts.len() {
        if label[seed] != usize::MAX {
            continue;
        }
        let id = sizes.len();
        label[seed] = id;
        stack.push(seed);
        let mut size = 0usize;
        while let Some(i) = stack.pop() {
            size += 1;
            let (cx, cy, cz) = cell(&pts[i]);
            for dx in -1..=1 {
                for dy in -1..=1 {
                    for dz in -1..=1 {
                        let Some(bucket) = grid.get(&(cx + dx, cy + dy, cz + dz)) else {
                            continue;
                        };
                        for &j in bucket {
                            if label[j] == usize::MAX && (pts[j] - pts[i]).norm_squared() <= r2 {
                                label[j] = id;
                                stack.push(j);
                            }
                        }
                    }
                }
            }
        }
        sizes.push(size);
    }
    let best = (0..sizes.len())
        .max_by(|&a, &b| sizes[a].cmp(&sizes[b]).then(b.cmp(&a)))
        .expect("at least one cluster");
    pts.iter()
        .zip(&label)
        .filter(|(_, &l)| l == best)
        .map(|(p, _)| *p)
        .collect()
}
