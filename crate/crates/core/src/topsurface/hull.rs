//! Alpha-shape concave hull over a Delaunay triangulation.

use std::collections::HashMap;

use delaunator::{triangulate, Point, EMPTY};
use nalgebra::Vector2;

use super::{Contour, TopSurfaceError};
use crate::scene::signed_area;

type V2 = Vector2<f64>;

const ALPHA_GROWTH: f64 = 1.5;
const ON_BOUNDARY_TOL: f64 = 1e-9;

fn circumradius(a: V2, b: V2, c: V2) -> f64 {
    let ab = (b - a).norm();
    let bc = (c - b).norm();
    let ca = (a - c).norm();
    let area2 = ((b - a).perp(&(c - a))).abs();
    if area2 == 0.0 {
        f64::INFINITY
    } else {
        ab * bc * ca / (2.0 * area2)
    }
}

fn point_in_or_on(poly: &[V2], p: V2) -> bool {
    let n = poly.len();
    let mut inside = false;
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        let ab = b - a;
        let len2 = ab.norm_squared();
        let t = if len2 > 0.0 {
            ((p - a).dot(&ab) / len2).clamp(0.0, 1.0)
        } else {
            0.0
        };
        if (a + ab * t - p).norm() <= ON_BOUNDARY_TOL {
            return true;
        }
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
            if p.x < x {
                inside = !inside;
            }
        }
    }
    inside
}

/// Alpha-shape boundary of `points`, counter-clockwise.
///
/// Delaunay triangles with circumradius ≤ `alpha` are kept and the largest
/// edge-connected group is traced. Whenever the resulting outer loop leaves
/// an input point outside, alpha grows by 1.5× and the shape is rebuilt, so
/// the contour always encloses every point; for large alpha it is the convex
/// hull.
pub fn concave_hull(points: &[V2], alpha: f64) -> Result<Contour, TopSurfaceError> {
    if points.len() < 3 {
        return Err(TopSurfaceError::Degenerate(format!(
            "{} points",
            points.len()
        )));
    }
    let pts: Vec<Point> = points.iter().map(|p| Point { x: p.x, y: p.y }).collect();
    let tri = triangulate(&pts);
    if tri.triangles.is_empty() {
        return Err(TopSurfaceError::Degenerate("collinear points".into()));
    }
    let ntri = tri.triangles.len() / 3;
    let corner = |t: usize, k: usize| points[tri.triangles[3 * t + k]];
    let radii: Vec<f64> = (0..ntri)
        .map(|t| circumradius(corner(t, 0), corner(t, 1), corner(t, 2)))
        .collect();
    let max_radius = radii
        .iter()
        .copied()
        .filter(|r| r.is_finite())
        .fold(0.0, f64::max);

    let mut alpha = alpha.max(f64::MIN_POSITIVE);
    loop {
        let keep: Vec<bool> = radii.iter().map(|&r| r <= alpha).collect();
        if let Some(ring) = largest_component_loop(points, &tri.triangles, &tri.halfedges, &keep) {
            if points.iter().all(|&p| point_in_or_on(&ring, p)) {
                return Contour::new(ring);
            }
        }
        if alpha > max_radius {
            // Every finite triangle is kept: the boundary is the convex hull.
            let hull: Vec<V2> = tri.hull.iter().map(|&i| points[i]).collect();
            let hull = if signed_area(&hull) < 0.0 {
                hull.into_iter().rev().collect()
            } else {
                hull
            };
            return Contour::new(hull);
        }
        alpha *= ALPHA_GROWTH;
    }
}

fn largest_component_loop(
    points: &[V2],
    triangles: &[usize],
    halfedges: &[usize],
    keep: &[bool],
) -> Option<Vec<V2>> {
    let ntri = keep.len();
    let mut comp = vec![usize::MAX; ntri];
    let mut areas: Vec<f64> = Vec::new();
    for seed in 0..ntri {
        if !keep[seed] || comp[seed] != usize::MAX {
            continue;
        }
        let id = areas.len();
        let mut area = 0.0;
        let mut stack = vec![seed];
        comp[seed] = id;
        while let Some(t) = stack.pop() {
            let [a, b, c] = [0, 1, 2].map(|k| points[triangles[3 * t + k]]);
            area += 0.5 * (b - a).perp(&(c - a)).abs();
            for k in 0..3 {
                let opp = halfedges[3 * t + k];
                if opp == EMPTY {
                    continue;
                }
                let u = opp / 3;
                if keep[u] && comp[u] == usize::MAX {
                    comp[u] = id;
                    stack.push(u);
                }
            }
        }
        areas.push(area);
    }
    let best = (0..areas.len()).max_by(|&a, &b| areas[a].total_cmp(&areas[b]).then(b.cmp(&a)))?;

    // Directed boundary edges of the component, each triangle taken CCW.
    let mut edges: HashMap<usize, Vec<usize>> = HashMap::new();
    let mut directed: Vec<(usize, usize)> = Vec::new();
    for t in (0..ntri).filter(|&t| comp[t] == best) {
        let mut v = [triangles[3 * t], triangles[3 * t + 1], triangles[3 * t + 2]];
        let [a, b, c] = v.map(|i| points[i]);
        if (b - a).perp(&(c - a)) < 0.0 {
            v.swap(1, 2);
        }
        for k in 0..3 {
            directed.push((v[k], v[(k + 1) % 3]));
        }
    }
    let set: std::collections::HashSet<(usize, usize)> = directed.iter().copied().collect();
    let mut boundary: Vec<(usize, usize)> = directed
        .into_iter()
        .filter(|&(a, b)| !set.contains(&(b, a)))
        .collect();
    boundary.sort_unstable();
    for &(a, b) in &boundary {
        edges.entry(a).or_default().push(b);
    }

    let mut used: std::collections::HashSet<(usize, usize)> = std::collections::HashSet::new();
    let mut loops: Vec<Vec<usize>> = Vec::new();
    for &(s0, s1) in &boundary {
        if used.contains(&(s0, s1)) {
            continue;
        }
        let mut ring = vec![s0];
        let (mut prev, mut cur) = (s0, s1);
        used.insert((s0, s1));
        let mut guard = 0;
        while cur != s0 && guard <= boundary.len() {
            guard += 1;
            ring.push(cur);
            let outs: Vec<usize> = edges[&cur]
                .iter()
                .copied()
                .filter(|&n| !used.contains(&(cur, n)))
                .collect();
            let next = match outs.len() {
                0 => break,
                1 => outs[0],
                _ => {
                    // Pinch vertex: turn as sharply clockwise as possible from
                    // the reversed incoming edge, splitting the boundary into
                    // simple loops.
                    let back = points[prev] - points[cur];
                    let ang = |n: usize| {
                        let d = points[n] - points[cur];
                        let a = back.perp(&d).atan2(back.dot(&d));
                        // Clockwise angle in (0, 2π].
                        let cw = -a;
                        if cw <= 0.0 {
                            cw + 2.0 * std::f64::consts::PI
                        } else {
                            cw
                        }
                    };
                    *outs
                        .iter()
                        .min_by(|&&x, &&y| ang(x).total_cmp(&ang(y)).then(x.cmp(&y)))
                        .expect("non-empty")
                }
            };
            used.insert((cur, next));
            prev = cur;
            cur = next;
        }
        if cur == s0 && ring.len() >= 3 {
            loops.push(ring);
        }
    }
    loops
        .into_iter()
        .map(|l| l.into_iter().map(|i| points[i]).collect::<Vec<V2>>())
        .filter(|r| signed_area(r) > 0.0)
        .max_by(|a, b| signed_area(a).total_cmp(&signed_area(b)))
}
