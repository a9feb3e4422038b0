//! Marching squares over a sampled 2D scalar field. Produces closed loops with
//! the negative region on the left, so outer boundaries come out
//! counter-clockwise and holes clockwise.

use std::collections::HashMap;

use nalgebra::Vector2;

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
enum EdgeKey {
    /// Edge from grid node (i, j) to (i + 1, j).
    H(usize, usize),
    /// Edge from grid node (i, j) to (i, j + 1).
    V(usize, usize),
}

/// `values` is row-major `nx × ny` (x fastest); node `(i, j)` sits at
/// `origin + step·(i, j)`. The field must be non-negative on the border.
pub(crate) fn contour_loops(
    values: &[f64],
    nx: usize,
    ny: usize,
    origin: Vector2<f64>,
    step: f64,
) -> Vec<Vec<Vector2<f64>>> {
    assert_eq!(values.len(), nx * ny);
    let at = |i: usize, j: usize| values[j * nx + i];
    let node = |i: usize, j: usize| origin + Vector2::new(i as f64, j as f64) * step;
    let lerp = |pa: Vector2<f64>, pb: Vector2<f64>, fa: f64, fb: f64| {
        let t = fa / (fa - fb);
        pa + (pb - pa) * t
    };

    let mut segments: HashMap<EdgeKey, (EdgeKey, Vector2<f64>)> = HashMap::new();
    let mut order: Vec<EdgeKey> = Vec::new();
    for j in 0..ny.saturating_sub(1) {
        for i in 0..nx.saturating_sub(1) {
            let corners = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)];
            let f = corners.map(|(a, b)| at(a, b));
            let inside = f.map(|v| v < 0.0);
            if inside.iter().all(|&b| b) || inside.iter().all(|&b| !b) {
                continue;
            }
            let keys = [
                EdgeKey::H(i, j),
                EdgeKey::V(i + 1, j),
                EdgeKey::H(i, j + 1),
                EdgeKey::V(i, j),
            ];
            // (edge index, leaves the inside when walking CCW, point)
            let mut crossings: Vec<(usize, bool, Vector2<f64>)> = Vec::with_capacity(4);
            for k in 0..4 {
                let a = k;
                let b = (k + 1) % 4;
                if inside[a] != inside[b] {
                    let p = lerp(
                        node(corners[a].0, corners[a].1),
                        node(corners[b].0, corners[b].1),
                        f[a],
                        f[b],
                    );
                    crossings.push((k, inside[a], p));
                }
            }
            let center_inside = f.iter().sum::<f64>() < 0.0;
            let n = crossings.len();
            for idx in 0..n {
                let (k, leaving, p) = crossings[idx];
                if !leaving {
                    continue;
                }
                let partner = (1..n)
                    .map(|s| {
                        if center_inside {
                            (idx + s) % n
                        } else {
                            (idx + n - s) % n
                        }
                    })
                    .find(|&m| !crossings[m].1)
                    .expect("entering crossing exists");
                let (k2, _, _) = crossings[partner];
                // Leaving crossing to entering crossing keeps the negative
                // region on the left.
                let from = keys[k];
                segments.insert(from, (keys[k2], p));
                order.push(from);
            }
        }
    }

    let mut loops = Vec::new();
    let mut used: HashMap<EdgeKey, bool> = HashMap::new();
    for start in order {
        if used.contains_key(&start) {
            continue;
        }
        let mut ring = Vec::new();
        let mut key = start;
        loop {
            if used.insert(key, true).is_some() {
                break;
            }
            let Some(&(next, p)) = segments.get(&key) else {
                break;
            };
            ring.push(p);
            key = next;
            if key == start {
                break;
            }
        }
        if ring.len() >= 3 {
            loops.push(ring);
        }
    }
    loops
}

/// Shoelace signed area (positive for counter-clockwise).
pub(crate) fn signed_area(ring: &[Vector2<f64>]) -> f64 {
    let n = ring.len();
    (0..n)
        .map(|i| {
            let a = ring[i];
            let b = ring[(i + 1) % n];
            a.x * b.y - b.x * a.y
        })
        .sum::<f64>()
        * 0.5
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(f: impl Fn(f64, f64) -> f64, n: usize, lo: f64, step: f64) -> Vec<f64> {
        let mut v = Vec::with_capacity(n * n);
        for j in 0..n {
            for i in 0..n {
                v.push(f(lo + i as f64 * step, lo + j as f64 * step));
            }
        }
        v
    }

    #[test]
    fn disk_gives_one_ccw_loop() {
        let n = 81;
        let step = 0.05;
        let vals = sample(|x, y| (x * x + y * y).sqrt() - 1.0, n, -2.0, step);
        let loops = contour_loops(&vals, n, n, Vector2::new(-2.0, -2.0), step);
        assert_eq!(loops.len(), 1);
        let area = signed_area(&loops[0]);
        assert!((area - std::f64::consts::PI).abs() < 0.01, "area {area}");
    }

    #[test]
    fn annulus_gives_outer_and_hole() {
        let n = 101;
        let step = 0.04;
        let vals = sample(
            |x, y| {
                let r = (x * x + y * y).sqrt();
                (r - 1.5).max(0.7 - r)
            },
            n,
            -2.0,
            step,
        );
        let loops = contour_loops(&vals, n, n, Vector2::new(-2.0, -2.0), step);
        assert_eq!(loops.len(), 2);
        let mut areas: Vec<f64> = loops.iter().map(|l| signed_area(l)).collect();
        areas.sort_by(f64::total_cmp);
        assert!(areas[0] < 0.0 && areas[1] > 0.0);
        let net: f64 = areas.iter().sum();
        let expected = std::f64::consts::PI * (1.5f64.powi(2) - 0.7f64.powi(2));
        assert!((net - expected).abs() < 0.02);
    }
}
