//! Top-surface planner: top-layer slab, planar projection, concave hull,
//! elliptical Fourier fit, dense normal sampling and an exhaustive
//! antipodal pair search.

mod efd;
mod hull;
mod pairs;

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{Grasp, GripperSpec, Observation, PlanError, Planner, PointCloud};
use crate::scene::signed_area;

pub use efd::{fit_efd, sample_curve, ContactCandidate, EfdCoefficients};
pub use hull::concave_hull;
pub use pairs::{best_grasp_pair, grasp_from_pair, pair_angle, score_pair, PairScore, PairWeights};

type V2 = Vector2<f64>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TopSurfaceError {
    #[error("point cloud is empty")]
    EmptyCloud,
    #[error("degenerate point set: {0}")]
    Degenerate(String),
    #[error("invalid contour: {0}")]
    InvalidContour(String),
}

/// Closed counter-clockwise polyline (the last vertex connects to the first).
#[derive(Debug, Clone, PartialEq)]
pub struct Contour {
    vertices: Vec<V2>,
}

impl Contour {
    pub fn new(vertices: Vec<V2>) -> Result<Self, TopSurfaceError> {
        if vertices.len() < 3 {
            return Err(TopSurfaceError::InvalidContour(format!(
                "{} vertices",
                vertices.len()
            )));
        }
        if !(signed_area(&vertices) > 0.0) {
            return Err(TopSurfaceError::InvalidContour(
                "not counter-clockwise or zero area".into(),
            ));
        }
        Ok(Self { vertices })
    }

    /// Skips the orientation check (used for clockwise test fixtures).
    pub fn from_vertices_unchecked(vertices: Vec<V2>) -> Self {
        Self { vertices }
    }

    pub fn vertices(&self) -> &[V2] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    pub fn perimeter(&self) -> f64 {
        let n = self.vertices.len();
        (0..n)
            .map(|i| (self.vertices[(i + 1) % n] - self.vertices[i]).norm())
            .sum()
    }

    /// Area centroid.
    pub fn centroid(&self) -> V2 {
        let n = self.vertices.len();
        let mut c = V2::zeros();
        let mut a = 0.0;
        for i in 0..n {
            let p = self.vertices[i];
            let q = self.vertices[(i + 1) % n];
            let cross = p.perp(&q);
            a += cross;
            c += (p + q) * cross;
        }
        c / (3.0 * a)
    }

    /// True when no two non-adjacent edges intersect.
    pub fn is_simple(&self) -> bool {
        let v = &self.vertices;
        let n = v.len();
        let orient = |a: V2, b: V2, c: V2| (b - a).perp(&(c - a));
        let cross = |a: V2, b: V2, c: V2, d: V2| {
            let o1 = orient(a, b, c);
            let o2 = orient(a, b, d);
            let o3 = orient(c, d, a);
            let o4 = orient(c, d, b);
            o1 * o2 < 0.0 && o3 * o4 < 0.0
        };
        for i in 0..n {
            for j in i + 1..n {
                if j == i + 1 || (i == 0 && j == n - 1) {
                    continue;
                }
                if cross(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n]) {
                    return false;
                }
            }
        }
        let mut seen: Vec<(u64, u64)> = v.iter().map(|p| (p.x.to_bits(), p.y.to_bits())).collect();
        seen.sort_unstable();
        seen.windows(2).all(|w| w[0] != w[1])
    }
}

/// Points with `z ∈ [z_max − thickness, z_max]`, in input order.
pub fn extract_top_layer(
    cloud: &PointCloud,
    thickness: f64,
) -> Result<PointCloud, TopSurfaceError> {
    let z_max = cloud.max_z().ok_or(TopSurfaceError::EmptyCloud)?;
    let floor = z_max - thickness;
    Ok(cloud.iter().filter(|p| p.z >= floor).copied().collect())
}

/// Drops the z coordinate.
pub fn project_to_plane(cloud: &PointCloud) -> Vec<V2> {
    cloud.iter().map(|p| V2::new(p.x, p.y)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TopSurfaceConfig {
    pub thickness_m: f64,
    pub alpha_m: f64,
    pub harmonics: usize,
    pub samples: usize,
    /// Friction coefficient assumed by the planner (the object's is unknown).
    pub mu: f64,
    pub clearance_m: f64,
    pub weights: PairWeights,
}

impl Default for TopSurfaceConfig {
    fn default() -> Self {
        Self {
            thickness_m: 0.02,
            alpha_m: 0.015,
            harmonics: 20,
            samples: 360,
            mu: 0.4,
            clearance_m: 0.01,
            weights: PairWeights::default(),
        }
    }
}

/// Intermediate products of one planning call.
#[derive(Debug, Clone)]
pub struct TopSurfaceTrace {
    pub contour: Contour,
    pub efd: EfdCoefficients,
    pub samples: Vec<ContactCandidate>,
    pub centroid: V2,
    pub pair: PairScore,
    pub grasp: Grasp,
}

#[derive(Debug, Clone, Default)]
pub struct TopSurfacePlanner {
    pub config: TopSurfaceConfig,
}

impl TopSurfacePlanner {
    pub fn new(config: TopSurfaceConfig) -> Self {
        Self { config }
    }

    /// Plans on a segmented object cloud and returns every stage's output.
    pub fn plan_cloud(
        &self,
        cloud: &PointCloud,
        gripper: &GripperSpec,
    ) -> Result<TopSurfaceTrace, PlanError> {
        let cfg = &self.config;
        let no_grasp = |e: TopSurfaceError| PlanError::NoGraspFound(e.to_string());
        let z_max = cloud
            .max_z()
            .ok_or_else(|| no_grasp(TopSurfaceError::EmptyCloud))?;
        let top = extract_top_layer(cloud, cfg.thickness_m).map_err(no_grasp)?;
        let pts = project_to_plane(&top);
        let contour = concave_hull(&pts, cfg.alpha_m).map_err(no_grasp)?;
        let efd = fit_efd(&contour, cfg.harmonics);
        let samples = sample_curve(&efd, cfg.samples);
        // Mass stand-in: mean of all object points, not just the top slab.
        let centroid = project_to_plane(cloud)
            .iter()
            .fold(V2::zeros(), |a, p| a + p)
            / cloud.len() as f64;
        let grasp_z = (z_max - cfg.thickness_m / 2.0).max(0.0);
        let (grasp, pair) = best_grasp_pair(
            &samples,
            gripper,
            cfg.mu,
            centroid,
            grasp_z,
            &cfg.weights,
            cfg.clearance_m,
        )?;
        Ok(TopSurfaceTrace {
            contour,
            efd,
            samples,
            centroid,
            pair,
            grasp,
        })
    }
}

impl Planner for TopSurfacePlanner {
    fn name(&self) -> &str {
        "topsurface"
    }

    fn plan(&self, observation: &Observation, gripper: &GripperSpec) -> Result<Grasp, PlanError> {
        self.plan_cloud(&observation.cloud, gripper)
            .map(|t| t.grasp)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector3;

    fn cube_cloud(side: f64, step: f64) -> PointCloud {
        let n = (side / step).round() as usize;
        let mut pts = Vec::new();
        for i in 0..=n {
            for j in 0..=n {
                let x = i as f64 * step - side / 2.0;
                let y = j as f64 * step - side / 2.0;
                pts.push(Vector3::new(x, y, side));
                for k in 0..n {
                    let z = k as f64 * step;
                    if i == 0 || j == 0 || i == n || j == n {
                        pts.push(Vector3::new(x, y, z));
                    }
                }
            }
        }
        PointCloud::new(pts)
    }

    #[test]
    fn top_layer_matches_predicate_scan() {
        let c = cube_cloud(0.06, 0.004);
        let top = extract_top_layer(&c, 0.02).unwrap();
        let expected: Vec<_> = c.iter().filter(|p| p.z >= 0.06 - 0.02).copied().collect();
        assert_eq!(top.points, expected);
        assert_eq!(extract_top_layer(&c, 1.0).unwrap(), c);
        assert_eq!(
            extract_top_layer(&PointCloud::default(), 0.02),
            Err(TopSurfaceError::EmptyCloud)
        );
    }

    #[test]
    fn projection_drops_z() {
        let c: PointCloud = vec![Vector3::new(0.1, 0.2, 0.05)].into_iter().collect();
        assert_eq!(project_to_plane(&c), vec![V2::new(0.1, 0.2)]);
        assert!(project_to_plane(&PointCloud::default()).is_empty());
    }

    #[test]
    fn cube_grasped_across_a_face() {
        let planner = TopSurfacePlanner::default();
        let g = GripperSpec::franka_like();
        let trace = planner.plan_cloud(&cube_cloud(0.06, 0.004), &g).unwrap();
        assert!(
            (trace.pair.distance - 0.06).abs() < 0.003,
            "{}",
            trace.pair.distance
        );
        assert!((trace.grasp.z - 0.05).abs() < 1e-12);
        assert!(trace.grasp.x.abs() < 0.003 && trace.grasp.y.abs() < 0.003);
        let first = planner
            .plan_cloud(&cube_cloud(0.06, 0.004), &g)
            .unwrap()
            .grasp;
        assert_eq!(first, trace.grasp);
    }

    #[test]
    fn contour_validation() {
        assert!(Contour::new(vec![V2::zeros(), V2::new(1.0, 0.0)]).is_err());
        let cw = vec![V2::new(0.0, 0.0), V2::new(0.0, 1.0), V2::new(1.0, 0.0)];
        assert!(Contour::new(cw).is_err());
        let bow = Contour::from_vertices_unchecked(vec![
            V2::new(0.0, 0.0),
            V2::new(1.0, 1.0),
            V2::new(1.0, 0.0),
            V2::new(0.0, 1.0),
        ]);
        assert!(!bow.is_simple());
    }
}
