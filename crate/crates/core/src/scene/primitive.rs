//! Solid primitives described by signed distance functions in the object's
//! local frame (z up, z = 0 on the table).

use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};

type V3 = Vector3<f64>;
type V2 = Vector2<f64>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Primitive {
    Sphere {
        center: [f64; 3],
        radius: f64,
    },
    /// Segment `a`–`b` swept by a ball.
    Capsule {
        a: [f64; 3],
        b: [f64; 3],
        radius: f64,
    },
    /// Flat-capped cylinder along an arbitrary axis.
    Cylinder {
        a: [f64; 3],
        b: [f64; 3],
        radius: f64,
    },
    /// Box rotated about z, edges rounded by `rounding`.
    #[serde(rename = "box")]
    Cuboid {
        center: [f64; 3],
        half_extents: [f64; 3],
        #[serde(default)]
        yaw: f64,
        #[serde(default)]
        rounding: f64,
    },
    /// Upright truncated cone.
    Frustum {
        base: [f64; 3],
        height: f64,
        bottom_radius: f64,
        top_radius: f64,
    },
    /// Upright hollow cylinder, open at the top, with a solid floor.
    Tube {
        base: [f64; 3],
        height: f64,
        outer_radius: f64,
        inner_radius: f64,
        floor: f64,
    },
    /// Circular arc swept by a ball. The arc midpoint lies along `yaw` from
    /// `center`; horizontal arcs lie in the table plane, vertical arcs in the
    /// plane spanned by the yaw direction and z.
    SweptArc {
        center: [f64; 3],
        arc_radius: f64,
        tube_radius: f64,
        half_angle: f64,
        #[serde(default)]
        yaw: f64,
        #[serde(default)]
        vertical: bool,
    },
    /// Simple polygon (CCW or CW) extruded between two heights.
    Prism {
        outline: Vec<[f64; 2]>,
        z_min: f64,
        z_max: f64,
    },
}

#[inline]
fn v3(a: &[f64; 3]) -> V3 {
    V3::new(a[0], a[1], a[2])
}

fn seg_distance(p: &V3, a: &V3, b: &V3) -> f64 {
    let pa = p - a;
    let ba = b - a;
    let h = (pa.dot(&ba) / ba.norm_squared()).clamp(0.0, 1.0);
    (pa - ba * h).norm()
}

fn capped_cylinder(p: &V3, a: &V3, b: &V3, r: f64) -> f64 {
    let ba = b - a;
    let pa = p - a;
    let baba = ba.norm_squared();
    let paba = pa.dot(&ba);
    let x = (pa * baba - ba * paba).norm() - r * baba;
    let y = (paba - baba * 0.5).abs() - baba * 0.5;
    let x2 = x * x;
    let y2 = y * y * baba;
    let d = if x.max(y) < 0.0 {
        -x2.min(y2)
    } else {
        (if x > 0.0 { x2 } else { 0.0 }) + (if y > 0.0 { y2 } else { 0.0 })
    };
    d.signum() * d.abs().sqrt() / baba
}

/// Upright cylinder occupying `z0..z1` around `(cx, cy)`.
fn upright_cylinder(p: &V3, cx: f64, cy: f64, z0: f64, z1: f64, r: f64) -> f64 {
    let radial = ((p.x - cx).powi(2) + (p.y - cy).powi(2)).sqrt() - r;
    let axial = (p.z - 0.5 * (z0 + z1)).abs() - 0.5 * (z1 - z0);
    extrude(radial, axial)
}

#[inline]
fn extrude(d2: f64, axial: f64) -> f64 {
    let outside = V2::new(d2.max(0.0), axial.max(0.0)).norm();
    d2.max(axial).min(0.0) + outside
}

fn frustum(p: &V3, base: &V3, height: f64, r1: f64, r2: f64) -> f64 {
    let h = 0.5 * height;
    let q = V2::new(
        ((p.x - base.x).powi(2) + (p.y - base.y).powi(2)).sqrt(),
        p.z - (base.z + h),
    );
    let k1 = V2::new(r2, h);
    let k2 = V2::new(r2 - r1, 2.0 * h);
    let ca = V2::new(
        q.x - q.x.min(if q.y < 0.0 { r1 } else { r2 }),
        q.y.abs() - h,
    );
    let t = ((k1 - q).dot(&k2) / k2.norm_squared()).clamp(0.0, 1.0);
    let cb = q - k1 + k2 * t;
    let s = if cb.x < 0.0 && ca.y < 0.0 { -1.0 } else { 1.0 };
    s * ca.norm_squared().min(cb.norm_squared()).sqrt()
}

fn capped_torus(p: &V3, half_angle: f64, ra: f64, rb: f64) -> f64 {
    let (s, c) = half_angle.sin_cos();
    let px = p.x.abs();
    let k = if c * px > s * p.y {
        px * s + p.y * c
    } else {
        (px * px + p.y * p.y).sqrt()
    };
    let q = V3::new(px, p.y, p.z);
    (q.norm_squared() + ra * ra - 2.0 * ra * k).max(0.0).sqrt() - rb
}

/// Signed distance to a simple polygon (negative inside).
pub(crate) fn polygon_sdf(outline: &[[f64; 2]], p: V2) -> f64 {
    let n = outline.len();
    let v = |i: usize| V2::new(outline[i][0], outline[i][1]);
    let mut d = (p - v(0)).norm_squared();
    let mut s = 1.0;
    let mut j = n - 1;
    for i in 0..n {
        let vi = v(i);
        let vj = v(j);
        let e = vj - vi;
        let w = p - vi;
        let b = w - e * (w.dot(&e) / e.norm_squared()).clamp(0.0, 1.0);
        d = d.min(b.norm_squared());
        let c1 = p.y >= vi.y;
        let c2 = p.y < vj.y;
        let c3 = e.x * w.y > e.y * w.x;
        if (c1 && c2 && c3) || (!c1 && !c2 && !c3) {
            s = -s;
        }
        j = i;
    }
    s * d.sqrt()
}

impl Primitive {
    /// Signed distance from `p` (object frame) to the surface; negative inside.
    pub fn sdf(&self, p: &V3) -> f64 {
        match self {
            Primitive::Sphere { center, radius } => (p - v3(center)).norm() - radius,
            Primitive::Capsule { a, b, radius } => seg_distance(p, &v3(a), &v3(b)) - radius,
            Primitive::Cylinder { a, b, radius } => capped_cylinder(p, &v3(a), &v3(b), *radius),
            Primitive::Cuboid {
                center,
                half_extents,
                yaw,
                rounding,
            } => {
                let d = p - v3(center);
                let (s, c) = yaw.sin_cos();
                let local = V3::new(c * d.x + s * d.y, -s * d.x + c * d.y, d.z);
                let q = local.abs() - (v3(half_extents) - V3::repeat(*rounding));
                let outside = q.map(|x| x.max(0.0)).norm();
                outside + q.max().min(0.0) - rounding
            }
            Primitive::Frustum {
                base,
                height,
                bottom_radius,
                top_radius,
            } => frustum(p, &v3(base), *height, *bottom_radius, *top_radius),
            Primitive::Tube {
                base,
                height,
                outer_radius,
                inner_radius,
                floor,
            } => {
                let outer = upright_cylinder(
                    p,
                    base[0],
                    base[1],
                    base[2],
                    base[2] + height,
                    *outer_radius,
                );
                let cavity = upright_cylinder(
                    p,
                    base[0],
                    base[1],
                    base[2] + floor,
                    base[2] + height + outer_radius,
                    *inner_radius,
                );
                outer.max(-cavity)
            }
            Primitive::SweptArc {
                center,
                arc_radius,
                tube_radius,
                half_angle,
                yaw,
                vertical,
            } => {
                let d = p - v3(center);
                let (s, c) = yaw.sin_cos();
                let along = c * d.x + s * d.y;
                let across = -s * d.x + c * d.y;
                // capped_torus frame: arc symmetric about +y, lying in xy.
                let local = if *vertical {
                    V3::new(d.z, along, across)
                } else {
                    V3::new(across, along, d.z)
                };
                capped_torus(&local, *half_angle, *arc_radius, *tube_radius)
            }
            Primitive::Prism {
                outline,
                z_min,
                z_max,
            } => {
                let d2 = polygon_sdf(outline, V2::new(p.x, p.y));
                let axial = (p.z - 0.5 * (z_min + z_max)).abs() - 0.5 * (z_max - z_min);
                extrude(d2, axial)
            }
        }
    }

    /// Axis-aligned bounds `(min, max)` in the object frame.
    pub fn bounds(&self) -> (V3, V3) {
        match self {
            Primitive::Sphere { center, radius } => {
                let c = v3(center);
                (c - V3::repeat(*radius), c + V3::repeat(*radius))
            }
            Primitive::Capsule { a, b, radius } => {
                let (a, b) = (v3(a), v3(b));
                (
                    a.inf(&b) - V3::repeat(*radius),
                    a.sup(&b) + V3::repeat(*radius),
                )
            }
            Primitive::Cylinder { a, b, radius } => {
                let (a, b) = (v3(a), v3(b));
                let axis = (b - a).normalize();
                let ext = axis.map(|e| radius * (1.0 - e * e).max(0.0).sqrt());
                (a.inf(&b) - ext, a.sup(&b) + ext)
            }
            Primitive::Cuboid {
                center,
                half_extents,
                yaw,
                ..
            } => {
                let (s, c) = yaw.sin_cos();
                let hx = half_extents[0] * c.abs() + half_extents[1] * s.abs();
                let hy = half_extents[0] * s.abs() + half_extents[1] * c.abs();
                let h = V3::new(hx, hy, half_extents[2]);
                (v3(center) - h, v3(center) + h)
            }
            Primitive::Frustum {
                base,
                height,
                bottom_radius,
                top_radius,
            } => {
                let r = bottom_radius.max(*top_radius);
                let b = v3(base);
                (b - V3::new(r, r, 0.0), b + V3::new(r, r, *height))
            }
            Primitive::Tube {
                base,
                height,
                outer_radius,
                ..
            } => {
                let b = v3(base);
                let r = *outer_radius;
                (b - V3::new(r, r, 0.0), b + V3::new(r, r, *height))
            }
            Primitive::SweptArc {
                center,
                arc_radius,
                tube_radius,
                half_angle,
                yaw,
                vertical,
            } => {
                let c = v3(center);
                let (s, co) = yaw.sin_cos();
                let dir = V3::new(co, s, 0.0);
                let side = if *vertical {
                    V3::new(0.0, 0.0, 1.0)
                } else {
                    V3::new(-s, co, 0.0)
                };
                let mut lo = V3::repeat(f64::INFINITY);
                let mut hi = V3::repeat(f64::NEG_INFINITY);
                let steps = 512;
                for k in 0..=steps {
                    let phi = -half_angle + 2.0 * half_angle * k as f64 / steps as f64;
                    let q = c + (dir * phi.cos() + side * phi.sin()) * *arc_radius;
                    lo = lo.inf(&q);
                    hi = hi.sup(&q);
                }
                (lo - V3::repeat(*tube_radius), hi + V3::repeat(*tube_radius))
            }
            Primitive::Prism {
                outline,
                z_min,
                z_max,
            } => {
                let mut lo = V3::new(f64::INFINITY, f64::INFINITY, *z_min);
                let mut hi = V3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, *z_max);
                for v in outline {
                    lo.x = lo.x.min(v[0]);
                    lo.y = lo.y.min(v[1]);
                    hi.x = hi.x.max(v[0]);
                    hi.y = hi.y.max(v[1]);
                }
                (lo, hi)
            }
        }
    }

    /// Checks dimensions are positive and finite.
    pub fn validate(&self) -> Result<(), String> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(format!("{name} must be positive, got {v}"))
            }
        };
        match self {
            Primitive::Sphere { radius, .. } => positive("radius", *radius),
            Primitive::Capsule { a, b, radius } | Primitive::Cylinder { a, b, radius } => {
                positive("radius", *radius)?;
                if a == b {
                    return Err("axis endpoints coincide".into());
                }
                Ok(())
            }
            Primitive::Cuboid {
                half_extents,
                rounding,
                ..
            } => {
                for h in half_extents {
                    positive("half extent", *h)?;
                }
                let min_half = half_extents.iter().cloned().fold(f64::INFINITY, f64::min);
                if !(*rounding >= 0.0 && *rounding < min_half) {
                    return Err("rounding must be in [0, smallest half extent)".into());
                }
                Ok(())
            }
            Primitive::Frustum {
                height,
                bottom_radius,
                top_radius,
                ..
            } => {
                positive("height", *height)?;
                positive("bottom_radius", *bottom_radius)?;
                positive("top_radius", *top_radius)
            }
            Primitive::Tube {
                height,
                outer_radius,
                inner_radius,
                floor,
                ..
            } => {
                positive("height", *height)?;
                positive("inner_radius", *inner_radius)?;
                if !(outer_radius > inner_radius) {
                    return Err("outer_radius must exceed inner_radius".into());
                }
                if !(*floor >= 0.0 && floor < height) {
                    return Err("floor must be in [0, height)".into());
                }
                Ok(())
            }
            Primitive::SweptArc {
                arc_radius,
                tube_radius,
                half_angle,
                ..
            } => {
                positive("arc_radius", *arc_radius)?;
                positive("tube_radius", *tube_radius)?;
                if !(*half_angle > 0.0 && *half_angle <= std::f64::consts::PI) {
                    return Err("half_angle must be in (0, π]".into());
                }
                Ok(())
            }
            Primitive::Prism {
                outline,
                z_min,
                z_max,
            } => {
                if outline.len() < 3 {
                    return Err("prism outline needs at least 3 vertices".into());
                }
                if !(z_max > z_min) {
                    return Err("prism needs z_max > z_min".into());
                }
                Ok(())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x: f64, y: f64, z: f64) -> V3 {
        V3::new(x, y, z)
    }

    #[test]
    fn sphere_and_capsule_distances() {
        let s = Primitive::Sphere {
            center: [0.0, 0.0, 0.03],
            radius: 0.03,
        };
        assert!((s.sdf(&p(0.0, 0.0, 0.1)) - 0.04).abs() < 1e-12);
        assert!((s.sdf(&p(0.0, 0.0, 0.03)) + 0.03).abs() < 1e-12);
        let c = Primitive::Capsule {
            a: [-0.05, 0.0, 0.01],
            b: [0.05, 0.0, 0.01],
            radius: 0.01,
        };
        assert!((c.sdf(&p(0.0, 0.03, 0.01)) - 0.02).abs() < 1e-12);
        assert!((c.sdf(&p(0.08, 0.0, 0.01)) - 0.02).abs() < 1e-12);
    }

    #[test]
    fn cylinder_box_and_frustum() {
        let cyl = Primitive::Cylinder {
            a: [0.0, 0.0, 0.0],
            b: [0.0, 0.0, 0.1],
            radius: 0.02,
        };
        assert!((cyl.sdf(&p(0.05, 0.0, 0.05)) - 0.03).abs() < 1e-12);
        assert!((cyl.sdf(&p(0.0, 0.0, 0.12)) - 0.02).abs() < 1e-12);
        assert!((cyl.sdf(&p(0.0, 0.0, 0.05)) + 0.02).abs() < 1e-12);

        let b = Primitive::Cuboid {
            center: [0.0, 0.0, 0.03],
            half_extents: [0.03, 0.03, 0.03],
            yaw: 0.0,
            rounding: 0.0,
        };
        assert!((b.sdf(&p(0.05, 0.0, 0.03)) - 0.02).abs() < 1e-12);
        assert!(b.sdf(&p(0.0, 0.0, 0.03)) < 0.0);

        let f = Primitive::Frustum {
            base: [0.0, 0.0, 0.0],
            height: 0.04,
            bottom_radius: 0.01,
            top_radius: 0.02,
        };
        assert!(f.sdf(&p(0.0, 0.0, 0.02)) < 0.0);
        assert!(f.sdf(&p(0.0, 0.0, 0.05)) > 0.0);
        // Radius at mid height is 0.015.
        assert!(f.sdf(&p(0.0149, 0.0, 0.02)) < 0.0);
        assert!(f.sdf(&p(0.0151, 0.0, 0.02)) > 0.0);
    }

    #[test]
    fn tube_is_hollow() {
        let t = Primitive::Tube {
            base: [0.0, 0.0, 0.0],
            height: 0.09,
            outer_radius: 0.035,
            inner_radius: 0.031,
            floor: 0.006,
        };
        assert!(t.sdf(&p(0.0, 0.0, 0.05)) > 0.0);
        assert!(t.sdf(&p(0.033, 0.0, 0.05)) < 0.0);
        assert!(t.sdf(&p(0.0, 0.0, 0.003)) < 0.0);
    }

    #[test]
    fn swept_arc_midpoint_along_yaw() {
        let arc = Primitive::SweptArc {
            center: [0.0, 0.0, 0.02],
            arc_radius: 0.1,
            tube_radius: 0.02,
            half_angle: 0.8,
            yaw: 0.0,
            vertical: false,
        };
        assert!(arc.sdf(&p(0.1, 0.0, 0.02)) < -0.019);
        assert!(arc.sdf(&p(-0.1, 0.0, 0.02)) > 0.0);
        let (lo, hi) = arc.bounds();
        assert!((hi.x - 0.12).abs() < 1e-9);
        assert!((hi.z - 0.04).abs() < 1e-12 && lo.z.abs() < 1e-12);

        let handle = Primitive::SweptArc {
            center: [0.0, 0.0, 0.05],
            arc_radius: 0.02,
            tube_radius: 0.005,
            half_angle: std::f64::consts::FRAC_PI_2,
            yaw: 0.0,
            vertical: true,
        };
        assert!(handle.sdf(&p(0.02, 0.0, 0.05)) < 0.0);
        assert!(handle.sdf(&p(0.0, 0.0, 0.07)) < 0.0);
        assert!(handle.sdf(&p(-0.02, 0.0, 0.05)) > 0.0);
    }

    #[test]
    fn prism_polygon_sdf() {
        let square = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        assert!((polygon_sdf(&square, V2::new(0.5, 0.5)) + 0.5).abs() < 1e-12);
        assert!((polygon_sdf(&square, V2::new(2.0, 0.5)) - 1.0).abs() < 1e-12);
        let prism = Primitive::Prism {
            outline: square,
            z_min: 0.0,
            z_max: 0.5,
        };
        assert!(prism.sdf(&p(0.5, 0.5, 0.25)) < 0.0);
        assert!((prism.sdf(&p(0.5, 0.5, 0.75)) - 0.25).abs() < 1e-12);
    }
}
