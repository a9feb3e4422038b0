use nalgebra::Vector3;

use super::object::{ObjectModel, PlacedObject, ScenePose};
use crate::domain::{CameraModel, DepthImage};

type V3 = Vector3<f64>;

const HIT_EPS: f64 = 1e-6;
const MAX_STEPS: usize = 512;

/// Depth image of the bare table.
pub fn render_table(camera: &CameraModel) -> DepthImage {
    DepthImage::filled(camera.width, camera.height, camera.standoff as f32)
}

/// Top-down depth image of `object` placed at `pose`.
///
/// Each pixel casts a perspective ray from the camera at height `standoff`
/// above the table origin and sphere-traces the solid; rays that miss hit
/// the table at depth `standoff`.
pub fn render_depth(object: &ObjectModel, pose: ScenePose, camera: &CameraModel) -> DepthImage {
    let placed = PlacedObject::new(object, pose);
    let (lo, hi) = placed.bounds();
    let s = camera.standoff;
    let mut data = vec![s as f32; camera.width * camera.height];
    crate::par::for_each_row(&mut data, camera.width, |v, row| {
        let dy = (v as f64 - camera.cy) / camera.fy;
        for (u, out) in row.iter_mut().enumerate() {
            let dx = (u as f64 - camera.cx) / camera.fx;
            if let Some(t) = trace(&placed, &lo, &hi, s, dx, dy) {
                *out = t as f32;
            }
        }
    });
    DepthImage::from_raw_lossy(camera.width, camera.height, data)
}

// Ray p(t) = (dx·t, dy·t, s − t) with t the depth along the optical axis.
fn trace(placed: &PlacedObject, lo: &V3, hi: &V3, s: f64, dx: f64, dy: f64) -> Option<f64> {
    let dir = V3::new(dx, dy, -1.0);
    let (mut t0, mut t1) = (s - hi.z, s - lo.z);
    for (d, l, h) in [(dx, lo.x, hi.x), (dy, lo.y, hi.y)] {
        if d.abs() < 1e-15 {
            if 0.0 < l || 0.0 > h {
                return None;
            }
            continue;
        }
        let (a, b) = (l / d, h / d);
        t0 = t0.max(a.min(b));
        t1 = t1.min(a.max(b));
    }
    t1 = t1.min(s);
    if t0 > t1 {
        return None;
    }
    let scale = dir.norm();
    let origin = V3::new(0.0, 0.0, s);
    let mut t = t0.max(0.0);
    let mut prev = t;
    for _ in 0..MAX_STEPS {
        let d = placed.sdf(&(origin + dir * t));
        if d < HIT_EPS {
            if d < 0.0 {
                t = refine(placed, &origin, &dir, prev, t);
            }
            return Some(t);
        }
        prev = t;
        t += d / scale;
        if t > t1 {
            return None;
        }
    }
    Some(t)
}

// Bisection on [outside, inside].
fn refine(placed: &PlacedObject, origin: &V3, dir: &V3, mut a: f64, mut b: f64) -> f64 {
    for _ in 0..40 {
        let m = 0.5 * (a + b);
        if placed.sdf(&(origin + dir * m)) < 0.0 {
            b = m;
        } else {
            a = m;
        }
    }
    0.5 * (a + b)
}
