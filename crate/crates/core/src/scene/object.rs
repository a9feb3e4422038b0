use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};

use super::marching::{contour_loops, signed_area};
use super::primitive::Primitive;
use super::SceneError;

type V2 = Vector2<f64>;
type V3 = Vector3<f64>;

/// Serializable description of an object: mass, friction and a union of
/// primitives in the object frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectSpec {
    pub mass_kg: f64,
    pub mu: f64,
    pub primitive: Vec<Primitive>,
}

/// Rigid solid resting on the table, built from a union of primitives.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectModel {
    name: String,
    primitives: Vec<Primitive>,
    mass_kg: f64,
    friction_mu: f64,
    lower: V3,
    upper: V3,
    centroid: V3,
    volume: f64,
}

impl ObjectModel {
    pub fn new(
        name: impl Into<String>,
        primitives: Vec<Primitive>,
        mass_kg: f64,
        friction_mu: f64,
    ) -> Result<Self, SceneError> {
        let name = name.into();
        let label = name.clone();
        let bad = |reason: String| SceneError::InvalidObject {
            name: label.clone(),
            reason,
        };
        if primitives.is_empty() {
            return Err(bad("no primitives".into()));
        }
        for p in &primitives {
            p.validate().map_err(&bad)?;
        }
        if !(mass_kg.is_finite() && mass_kg > 0.0) {
            return Err(bad(format!("mass {mass_kg} must be positive")));
        }
        if !(friction_mu > 0.0 && friction_mu <= 2.0) {
            return Err(bad(format!("friction {friction_mu} outside (0, 2]")));
        }
        let mut lower = V3::repeat(f64::INFINITY);
        let mut upper = V3::repeat(f64::NEG_INFINITY);
        for p in &primitives {
            let (lo, hi) = p.bounds();
            lower = lower.inf(&lo);
            upper = upper.sup(&hi);
        }
        if lower.z < -1e-9 {
            return Err(bad(format!("extends below the table (z = {})", lower.z)));
        }
        let mut model = Self {
            name,
            primitives,
            mass_kg,
            friction_mu,
            lower,
            upper,
            centroid: V3::zeros(),
            volume: 0.0,
        };
        let (volume, centroid) = model.integrate_volume();
        if volume <= 0.0 {
            return Err(bad("solid has no volume".into()));
        }
        model.volume = volume;
        model.centroid = centroid;
        if model.cross_section_local(1e-4).is_empty() {
            return Err(bad("object does not touch the table".into()));
        }
        Ok(model)
    }

    pub fn from_spec(name: impl Into<String>, spec: &ObjectSpec) -> Result<Self, SceneError> {
        Self::new(name, spec.primitive.clone(), spec.mass_kg, spec.mu)
    }

    pub fn to_spec(&self) -> ObjectSpec {
        ObjectSpec {
            mass_kg: self.mass_kg,
            mu: self.friction_mu,
            primitive: self.primitives.clone(),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn primitives(&self) -> &[Primitive] {
        &self.primitives
    }

    pub fn mass_kg(&self) -> f64 {
        self.mass_kg
    }

    pub fn friction_mu(&self) -> f64 {
        self.friction_mu
    }

    /// Copy with a different mass; everything else unchanged.
    pub fn with_mass(&self, mass_kg: f64) -> Self {
        Self {
            mass_kg,
            ..self.clone()
        }
    }

    /// Copy with a different friction coefficient.
    pub fn with_friction(&self, mu: f64) -> Self {
        Self {
            friction_mu: mu,
            ..self.clone()
        }
    }

    /// Object-frame bounding box.
    pub fn bounds(&self) -> (V3, V3) {
        (self.lower, self.upper)
    }

    pub fn height(&self) -> f64 {
        self.upper.z
    }

    /// Center of mass in the object frame (uniform density).
    pub fn centroid(&self) -> V3 {
        self.centroid
    }

    pub fn volume(&self) -> f64 {
        self.volume
    }

    /// Signed distance in the object frame.
    #[inline]
    pub fn sdf_local(&self, p: &V3) -> f64 {
        self.primitives
            .iter()
            .map(|prim| prim.sdf(p))
            .fold(f64::INFINITY, f64::min)
    }

    fn cross_section_local(&self, z: f64) -> Vec<Vec<V2>> {
        CrossSection::new(self, ScenePose::default(), z).outline(0.001)
    }

    // Midpoint-rule volume integral over the bounding box.
    fn integrate_volume(&self) -> (f64, V3) {
        let ext = self.upper - self.lower;
        let step = (ext.max() / 80.0).clamp(0.0005, 0.002);
        let n = ext.map(|e| ((e / step).ceil() as usize).max(1));
        let mut count = 0usize;
        let mut sum = V3::zeros();
        for k in 0..n.z {
            for j in 0..n.y {
                for i in 0..n.x {
                    let p = self.lower
                        + V3::new(
                            (i as f64 + 0.5) * step,
                            (j as f64 + 0.5) * step,
                            (k as f64 + 0.5) * step,
                        );
                    if self.sdf_local(&p) < 0.0 {
                        count += 1;
                        sum += p;
                    }
                }
            }
        }
        let cell = step * step * step;
        if count == 0 {
            return (0.0, V3::zeros());
        }
        (count as f64 * cell, sum / count as f64)
    }
}

/// Placement of an object on the table: position and heading.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ScenePose {
    #[serde(rename = "x_m")]
    pub x: f64,
    #[serde(rename = "y_m")]
    pub y: f64,
    #[serde(rename = "yaw_rad")]
    pub yaw: f64,
}

impl ScenePose {
    /// Half-width of the square workspace around the table origin.
    pub const WORKSPACE_HALF: f64 = 0.4;

    pub fn new(x: f64, y: f64, yaw: f64) -> Self {
        Self { x, y, yaw }
    }

    pub fn in_workspace(&self) -> bool {
        self.x.abs() <= Self::WORKSPACE_HALF + 1e-12 && self.y.abs() <= Self::WORKSPACE_HALF + 1e-12
    }

    #[inline]
    pub fn world_to_local(&self, p: &V3) -> V3 {
        let (s, c) = self.yaw.sin_cos();
        let dx = p.x - self.x;
        let dy = p.y - self.y;
        V3::new(c * dx + s * dy, -s * dx + c * dy, p.z)
    }

    #[inline]
    pub fn local_to_world(&self, p: &V3) -> V3 {
        let (s, c) = self.yaw.sin_cos();
        V3::new(c * p.x - s * p.y + self.x, s * p.x + c * p.y + self.y, p.z)
    }

    /// Rotates a table-plane direction from the object frame to the world.
    #[inline]
    pub fn rotate(&self, d: V2) -> V2 {
        let (s, c) = self.yaw.sin_cos();
        V2::new(c * d.x - s * d.y, s * d.x + c * d.y)
    }
}

/// An object placed on the table.
#[derive(Debug, Clone, Copy)]
pub struct PlacedObject<'a> {
    pub model: &'a ObjectModel,
    pub pose: ScenePose,
}

impl<'a> PlacedObject<'a> {
    pub fn new(model: &'a ObjectModel, pose: ScenePose) -> Self {
        Self { model, pose }
    }

    #[inline]
    pub fn sdf(&self, p: &V3) -> f64 {
        self.model.sdf_local(&self.pose.world_to_local(p))
    }

    /// World-frame axis-aligned bounds.
    pub fn bounds(&self) -> (V3, V3) {
        let (lo, hi) = self.model.bounds();
        let mut wlo = V3::repeat(f64::INFINITY);
        let mut whi = V3::repeat(f64::NEG_INFINITY);
        for &x in &[lo.x, hi.x] {
            for &y in &[lo.y, hi.y] {
                for &z in &[lo.z, hi.z] {
                    let w = self.pose.local_to_world(&V3::new(x, y, z));
                    wlo = wlo.inf(&w);
                    whi = whi.sup(&w);
                }
            }
        }
        (wlo, whi)
    }

    pub fn centroid(&self) -> V3 {
        self.pose.local_to_world(&self.model.centroid())
    }

    pub fn cross_section(&self, z: f64) -> CrossSection<'a> {
        CrossSection::new(self.model, self.pose, z)
    }
}

/// Horizontal slice of a placed object at height `z`, in world coordinates.
///
/// Exact membership, boundary normals and chord intersections come from the
/// solid's signed distance; [`CrossSection::outline`] polygonizes it.
#[derive(Debug, Clone, Copy)]
pub struct CrossSection<'a> {
    model: &'a ObjectModel,
    pose: ScenePose,
    z: f64,
}

/// A stretch `[t0, t1]` of a line lying inside the slice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChordInterval {
    pub t0: f64,
    pub t1: f64,
}

impl<'a> CrossSection<'a> {
    pub fn new(model: &'a ObjectModel, pose: ScenePose, z: f64) -> Self {
        Self { model, pose, z }
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    #[inline]
    pub fn sdf(&self, p: V2) -> f64 {
        self.model
            .sdf_local(&self.pose.world_to_local(&V3::new(p.x, p.y, self.z)))
    }

    pub fn contains(&self, p: V2) -> bool {
        self.sdf(p) < 0.0
    }

    pub fn is_empty(&self) -> bool {
        self.z < self.model.lower.z
            || self.z >= self.model.height()
            || self.outline(0.0005).is_empty()
    }

    /// Outward unit normal of the slice boundary near `p`.
    pub fn normal(&self, p: V2) -> V2 {
        let h = 1e-6;
        let gx = self.sdf(p + V2::new(h, 0.0)) - self.sdf(p - V2::new(h, 0.0));
        let gy = self.sdf(p + V2::new(0.0, h)) - self.sdf(p - V2::new(0.0, h));
        let g = V2::new(gx, gy);
        let n = g.norm();
        if n > 0.0 {
            g / n
        } else {
            V2::zeros()
        }
    }

    /// Intervals of `origin + t·dir` (`dir` unit) inside the slice, for
    /// `t ∈ [t_min, t_max]`, in increasing order.
    pub fn chord_intervals(
        &self,
        origin: V2,
        dir: V2,
        t_min: f64,
        t_max: f64,
    ) -> Vec<ChordInterval> {
        const MIN_STEP: f64 = 2e-5;
        let f = |t: f64| self.sdf(origin + dir * t);
        let crossing = |mut a: f64, mut b: f64, fa_neg: bool| {
            for _ in 0..60 {
                let m = 0.5 * (a + b);
                if (f(m) < 0.0) == fa_neg {
                    a = m;
                } else {
                    b = m;
                }
            }
            0.5 * (a + b)
        };
        let mut out = Vec::new();
        let mut t = t_min;
        let mut d = f(t);
        let mut start = if d < 0.0 { Some(t_min) } else { None };
        let mut guard = 0usize;
        while t < t_max && guard < 1_000_000 {
            guard += 1;
            let next = (t + d.abs().max(MIN_STEP)).min(t_max);
            let dn = f(next);
            if (d < 0.0) != (dn < 0.0) {
                let c = crossing(t, next, d < 0.0);
                match start.take() {
                    Some(s) => out.push(ChordInterval { t0: s, t1: c }),
                    None => start = Some(c),
                }
            }
            t = next;
            d = dn;
        }
        if let Some(s) = start {
            out.push(ChordInterval { t0: s, t1: t_max });
        }
        out
    }

    /// Boundary loops sampled at `step` meters: counter-clockwise outer
    /// boundaries, clockwise holes.
    pub fn outline(&self, step: f64) -> Vec<Vec<V2>> {
        if self.z < self.model.lower.z || self.z > self.model.upper.z {
            return Vec::new();
        }
        let placed = PlacedObject::new(self.model, self.pose);
        let (lo, hi) = placed.bounds();
        let margin = 2.0 * step;
        let origin = V2::new(lo.x - margin, lo.y - margin);
        let nx = (((hi.x - lo.x) + 2.0 * margin) / step).ceil() as usize + 1;
        let ny = (((hi.y - lo.y) + 2.0 * margin) / step).ceil() as usize + 1;
        let mut values = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                values.push(self.sdf(origin + V2::new(i as f64, j as f64) * step));
            }
        }
        contour_loops(&values, nx, ny, origin, step)
    }

    /// Net area of the slice from its outline.
    pub fn area(&self, step: f64) -> f64 {
        self.outline(step).iter().map(|l| signed_area(l)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn cube() -> ObjectModel {
        ObjectModel::new(
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
        .unwrap()
    }

    #[test]
    fn cube_volume_and_centroid() {
        let c = cube();
        assert!((c.volume() - 0.06f64.powi(3)).abs() / 0.06f64.powi(3) < 0.02);
        assert!((c.centroid() - V3::new(0.0, 0.0, 0.03)).norm() < 1e-3);
        assert!((c.height() - 0.06).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_physical_parameters() {
        let prims = cube().primitives().to_vec();
        assert!(ObjectModel::new("x", prims.clone(), 0.0, 0.5).is_err());
        assert!(ObjectModel::new("x", prims.clone(), 0.1, 2.5).is_err());
        assert!(ObjectModel::new("x", prims, 0.1, 0.0).is_err());
    }

    #[test]
    fn cross_section_empty_above_top_nonempty_at_base() {
        let c = cube();
        let placed = PlacedObject::new(&c, ScenePose::new(0.1, 0.0, 0.3));
        assert!(placed.cross_section(0.07).is_empty());
        assert!(!placed.cross_section(1e-4).is_empty());
        let area = placed.cross_section(0.03).area(0.0005);
        assert!((area - 0.0036).abs() < 2e-5, "area {area}");
    }

    #[test]
    fn chord_through_rotated_cube() {
        let c = cube();
        let placed = PlacedObject::new(&c, ScenePose::new(0.1, -0.05, PI / 4.0));
        let cs = placed.cross_section(0.03);
        let iv = cs.chord_intervals(V2::new(0.0, -0.05), V2::new(1.0, 0.0), 0.0, 0.3);
        assert_eq!(iv.len(), 1);
        let half_diag = 0.03 * 2f64.sqrt();
        assert!((iv[0].t0 - (0.1 - half_diag)).abs() < 1e-9);
        assert!((iv[0].t1 - (0.1 + half_diag)).abs() < 1e-9);
    }

    #[test]
    fn normals_point_outward() {
        let ball = ObjectModel::new(
            "ball",
            vec![Primitive::Sphere {
                center: [0.0, 0.0, 0.03],
                radius: 0.03,
            }],
            0.05,
            0.8,
        )
        .unwrap();
        let cs = PlacedObject::new(&ball, ScenePose::default()).cross_section(0.03);
        for k in 0..8 {
            let a = k as f64 * PI / 4.0;
            let dir = V2::new(a.cos(), a.sin());
            let n = cs.normal(dir * 0.03);
            assert!((n - dir).norm() < 1e-6);
        }
    }

    #[test]
    fn pose_round_trip() {
        let pose = ScenePose::new(0.1, -0.2, 1.1);
        let p = V3::new(0.03, 0.02, 0.05);
        let q = pose.world_to_local(&pose.local_to_world(&p));
        assert!((p - q).norm() < 1e-15);
    }
}
