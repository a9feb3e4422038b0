//! Dominant-plane removal by random sample consensus.

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::PreprocessError;
use crate::domain::PointCloud;

type V3 = Vector3<f64>;

/// Plane `normal · p = offset` with unit normal oriented towards +z.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plane {
    pub normal: V3,
    pub offset: f64,
}

impl Plane {
    fn from_points(a: &V3, b: &V3, c: &V3) -> Option<Self> {
        let n = (b - a).cross(&(c - a));
        let len = n.norm();
        if len < 1e-12 {
            return None;
        }
        Some(Self::oriented(n / len, a))
    }

    fn oriented(n: V3, through: &V3) -> Self {
        let n = if n.z < 0.0 { -n } else { n };
        Self {
            normal: n,
            offset: n.dot(through),
        }
    }

    #[inline]
    pub fn distance(&self, p: &V3) -> f64 {
        (self.normal.dot(p) - self.offset).abs()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RansacParams {
    pub iterations: usize,
    pub seed: u64,
    /// Minimum fraction of the points, other than the three sampled ones, that
    /// must lie within tolerance of the plane.
    pub min_support: f64,
}

impl Default for RansacParams {
    fn default() -> Self {
        Self {
            iterations: 500,
            seed: 0x5eed_0001,
            min_support: 0.3,
        }
    }
}

/// Least-squares plane through `points` (total least squares via the
/// covariance eigenvector of smallest eigenvalue).
pub fn fit_plane(points: &[V3]) -> Option<Plane> {
    if points.len() < 3 {
        return None;
    }
    let n = points.len() as f64;
    let mean = points.iter().fold(V3::zeros(), |acc, p| acc + p) / n;
    let mut cov = Matrix3::zeros();
    for p in points {
        let d = p - mean;
        cov += d * d.transpose();
    }
    let eig = SymmetricEigen::new(cov);
    let (k, _) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))?;
    let normal = eig.eigenvectors.column(k).into_owned();
    Some(Plane::oriented(normal.normalize(), &mean))
}

/// Fits the dominant plane and returns the points farther than `tol` from
/// it, in input order, together with the plane.
pub fn remove_plane_with(
    cloud: &PointCloud,
    tol: f64,
    params: &RansacParams,
) -> Result<(PointCloud, Plane), PreprocessError> {
    let pts = &cloud.points;
    if pts.is_empty() {
        return Err(PreprocessError::EmptyCloud);
    }
    let n = pts.len();
    // Support excludes the three points defining each hypothesis, which lie
    // on it trivially.
    let needed = 3 + (params.min_support * (n as f64 - 3.0)).ceil() as usize;
    if n <= 3 {
        return Err(PreprocessError::NoPlane { best: 0, total: n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let hypotheses: Vec<[usize; 3]> = (0..params.iterations)
        .map(|_| {
            let s = sample(&mut rng, n, 3);
            [s.index(0), s.index(1), s.index(2)]
        })
        .collect();
    let counts = crate::par::map_slice(&hypotheses, |&[a, b, c]| {
        Plane::from_points(&pts[a], &pts[b], &pts[c])
            .map(|pl| (pts.iter().filter(|p| pl.distance(p) <= tol).count(), pl))
    });
    // Highest support, earliest hypothesis on ties.
    let best = counts
        .into_iter()
        .flatten()
        .enumerate()
        .max_by(|(i, (ca, _)), (j, (cb, _))| ca.cmp(cb).then(j.cmp(i)))
        .map(|(_, c)| c);
    let Some((count, plane)) = best else {
        return Err(PreprocessError::NoPlane { best: 0, total: n });
    };
    if count < needed {
        return Err(PreprocessError::NoPlane {
            best: count,
            total: n,
        });
    }
    let inliers: Vec<V3> = pts
        .iter()
        .filter(|p| plane.distance(p) <= tol)
        .copied()
        .collect();
    let refined = fit_plane(&inliers)
        .filter(|r| pts.iter().filter(|p| r.distance(p) <= tol).count() >= count)
        .unwrap_or(plane);
    let rest = pts
        .iter()
        .filter(|p| refined.distance(p) > tol)
        .copied()
        .collect();
    Ok((PointCloud::new(rest), refined))
}

/// [`remove_plane_with`] using the default consensus parameters.
pub fn remove_plane(cloud: &PointCloud, tol: f64) -> Result<PointCloud, PreprocessError> {
    remove_plane_with(cloud, tol, &RansacParams::default()).map(|(c, _)| c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::CameraModel;
    use crate::scene::{depth_to_cloud, render_depth, ObjectModel, Primitive, ScenePose};
    use rand::Rng;

    fn table_grid(n: usize, step: f64) -> Vec<V3> {
        let mut v = Vec::new();
        for j in 0..n {
            for i in 0..n {
                v.push(V3::new(i as f64 * step - 0.2, j as f64 * step - 0.2, 0.0));
            }
        }
        v
    }

    #[test]
    fn pure_table_becomes_empty() {
        let cloud = PointCloud::new(table_grid(50, 0.008));
        assert!(remove_plane(&cloud, 0.005).unwrap().is_empty());
    }

    #[test]
    fn scattered_points_have_no_plane() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pts: Vec<V3> = (0..10)
            .map(|_| V3::new(rng.random(), rng.random(), rng.random()))
            .collect();
        let r = remove_plane(&PointCloud::new(pts), 0.0001);
        assert!(matches!(r, Err(PreprocessError::NoPlane { .. })));
    }

    #[test]
    fn rendered_table_plane_recovered() {
        let cam = CameraModel::default();
        let cube = ObjectModel::new(
            "cube",
            vec![Primitive::Cuboid {
                center: [0.0, 0.0, 0.03],
                half_extents: [0.03, 0.03, 0.03],
                yaw: 0.0,
                rounding: 0.0,
            }],
            0.2,
            0.5,
        )
        .unwrap();
        let depth = render_depth(&cube, ScenePose::default(), &cam);
        let cloud = depth_to_cloud(&depth, &cam);
        let (rest, plane) = remove_plane_with(&cloud, 0.005, &RansacParams::default()).unwrap();
        assert!(plane.normal.z.acos().to_degrees() < 1.0);
        assert!(plane.offset.abs() < 0.001);
        // Ground truth: points of the cube above the tolerance.
        let expected = cloud.points.iter().filter(|p| p.z > 0.005).count();
        let diff = (rest.len() as f64 - expected as f64).abs();
        assert!(
            diff <= 0.02 * expected as f64,
            "{} vs {expected}",
            rest.len()
        );
        assert!(rest.points.iter().all(|p| p.z > 0.004));
    }

    #[test]
    fn least_squares_fit_of_tilted_plane() {
        let n = V3::new(0.1, -0.2, 1.0).normalize();
        let pts: Vec<V3> = table_grid(10, 0.01)
            .into_iter()
            .map(|p| V3::new(p.x, p.y, (0.3 - n.x * p.x - n.y * p.y) / n.z))
            .collect();
        let pl = fit_plane(&pts).unwrap();
        assert!((pl.normal - n).norm() < 1e-9);
        assert!((pl.offset - 0.3).abs() < 1e-9);
    }
}
