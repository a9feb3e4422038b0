//! Exhaustive antipodal pair search over sampled contact candidates.

use std::cmp::Ordering;
use std::f64::consts::PI;

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use super::efd::ContactCandidate;
use crate::domain::{normalize_angle, Grasp, GripperSpec, PlanError};

type V2 = Vector2<f64>;

/// Weights of the pair cost
/// `J = w_a·(π − ∠(n_i, n_j)) + w_b·(β_i + β_j) + w_c·d_c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairWeights {
    pub w_a: f64,
    pub w_b: f64,
    /// Per meter of centroid offset.
    pub w_c: f64,
}

impl Default for PairWeights {
    fn default() -> Self {
        Self {
            w_a: 1.0,
            w_b: 1.0,
            w_c: 10.0,
        }
    }
}

/// Evaluation of one contact pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairScore {
    pub i: usize,
    pub j: usize,
    pub distance: f64,
    /// Friction-cone deviation at each contact: angle between the inward
    /// normal and the chord towards the other contact.
    pub beta_i: f64,
    pub beta_j: f64,
    /// Distance from the centroid to the contact line.
    pub d_c: f64,
    pub cost: f64,
}

fn angle_between(a: V2, b: V2) -> f64 {
    a.perp(&b).atan2(a.dot(&b)).abs()
}

/// Scores contacts `(p_i, n_i)`, `(p_j, n_j)` with outward normals. Returns
/// `None` when the pair violates the opening range or a friction cone.
#[allow(clippy::too_many_arguments)]
pub fn score_pair(
    pi: V2,
    ni: V2,
    pj: V2,
    nj: V2,
    gripper: &GripperSpec,
    mu: f64,
    centroid: V2,
    weights: &PairWeights,
) -> Option<(f64, f64, f64, f64, f64)> {
    let chord = pj - pi;
    let distance = chord.norm();
    if !(distance >= gripper.min_opening && distance <= gripper.max_opening) || distance == 0.0 {
        return None;
    }
    let cone = mu.atan();
    let beta_i = angle_between(-ni, chord);
    let beta_j = angle_between(-nj, -chord);
    if beta_i > cone || beta_j > cone {
        return None;
    }
    let d_c = (centroid - pi).perp(&chord).abs() / distance;
    let cost = weights.w_a * (PI - angle_between(ni, nj))
        + weights.w_b * (beta_i + beta_j)
        + weights.w_c * d_c;
    Some((distance, beta_i, beta_j, d_c, cost))
}

/// Grasp for contacts `pi`, `pj`: midpoint, closing direction, opening with
/// clearance capped at the stroke.
pub fn grasp_from_pair(
    pi: V2,
    pj: V2,
    z: f64,
    cost: f64,
    gripper: &GripperSpec,
    clearance: f64,
) -> Grasp {
    let mid = (pi + pj) * 0.5;
    let chord = pj - pi;
    let width = (chord.norm() + clearance).min(gripper.max_opening);
    Grasp::new(
        mid.x,
        mid.y,
        z,
        chord.y.atan2(chord.x),
        width,
        1.0 / (1.0 + cost),
    )
}

// (cost, angle, y, x, i, j): lower is better.
fn compare(a: &(PairScore, Grasp), b: &(PairScore, Grasp)) -> Ordering {
    a.0.cost
        .total_cmp(&b.0.cost)
        .then_with(|| a.1.tie_order(&b.1))
        .then(a.0.i.cmp(&b.0.i))
        .then(a.0.j.cmp(&b.0.j))
}

/// Minimum-cost feasible pair among all `i < j`, and the resulting grasp.
pub fn best_grasp_pair(
    samples: &[ContactCandidate],
    gripper: &GripperSpec,
    mu: f64,
    centroid: V2,
    grasp_z: f64,
    weights: &PairWeights,
    clearance: f64,
) -> Result<(Grasp, PairScore), PlanError> {
    if samples.len() < 2 {
        return Err(PlanError::NoGraspFound(
            "fewer than two contact samples".into(),
        ));
    }
    let m = samples.len();
    let per_row = crate::par::map_range(m, |i| {
        let a = &samples[i];
        let mut best: Option<(PairScore, Grasp)> = None;
        for (j, b) in samples.iter().enumerate().skip(i + 1) {
            let Some((distance, beta_i, beta_j, d_c, cost)) = score_pair(
                a.point, a.normal, b.point, b.normal, gripper, mu, centroid, weights,
            ) else {
                continue;
            };
            if best.as_ref().is_some_and(|(s, _)| cost > s.cost) {
                continue;
            }
            let cand = (
                PairScore {
                    i,
                    j,
                    distance,
                    beta_i,
                    beta_j,
                    d_c,
                    cost,
                },
                grasp_from_pair(a.point, b.point, grasp_z, cost, gripper, clearance),
            );
            if best
                .as_ref()
                .is_none_or(|cur| compare(&cand, cur) == Ordering::Less)
            {
                best = Some(cand);
            }
        }
        best
    });
    per_row
        .into_iter()
        .flatten()
        .min_by(compare)
        .map(|(s, g)| (g, s))
        .ok_or_else(|| PlanError::NoGraspFound("no feasible antipodal pair".into()))
}

/// Angle of the closing axis of a pair, in `[0, π)`.
pub fn pair_angle(pi: V2, pj: V2) -> f64 {
    let d = pj - pi;
    normalize_angle(d.y.atan2(d.x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topsurface::{fit_efd, sample_curve, Contour};
    use proptest::prelude::*;

    fn circle_samples(r: f64, m: usize) -> Vec<ContactCandidate> {
        (0..m)
            .map(|k| {
                let a = 2.0 * PI * k as f64 / m as f64;
                let n = V2::new(a.cos(), a.sin());
                ContactCandidate {
                    point: n * r,
                    normal: n,
                    curvature: 1.0 / r,
                    arc_param: k as f64 / m as f64,
                }
            })
            .collect()
    }

    // Samples along a polygon with per-edge outward normals.
    fn polygon_samples(poly: &[V2], per_edge: usize) -> Vec<ContactCandidate> {
        let n = poly.len();
        let mut out = Vec::new();
        for i in 0..n {
            let a = poly[i];
            let b = poly[(i + 1) % n];
            let d = b - a;
            let normal = V2::new(d.y, -d.x).normalize();
            for k in 0..per_edge {
                let t = (k as f64 + 0.5) / per_edge as f64;
                out.push(ContactCandidate {
                    point: a + d * t,
                    normal,
                    curvature: 0.0,
                    arc_param: 0.0,
                });
            }
        }
        out
    }

    // Reference: every ordered pair, no early exits.
    fn brute_force_min(
        samples: &[ContactCandidate],
        g: &GripperSpec,
        mu: f64,
        c: V2,
    ) -> Option<f64> {
        let w = PairWeights::default();
        let mut best: Option<f64> = None;
        for a in samples {
            for b in samples {
                if let Some((.., cost)) =
                    score_pair(a.point, a.normal, b.point, b.normal, g, mu, c, &w)
                {
                    best = Some(best.map_or(cost, |x: f64| x.min(cost)));
                }
            }
        }
        best
    }

    #[test]
    fn circle_grasp_passes_through_centroid() {
        let g = GripperSpec::franka_like();
        let (grasp, score) = best_grasp_pair(
            &circle_samples(0.02, 360),
            &g,
            0.5,
            V2::zeros(),
            0.05,
            &PairWeights::default(),
            0.01,
        )
        .unwrap();
        assert!(score.d_c < 1e-4);
        assert!((score.distance - 0.04).abs() < 1e-9);
        assert!((grasp.width - 0.05).abs() < 1e-9);
        assert!(grasp.x.hypot(grasp.y) < 1e-4);
    }

    #[test]
    fn rectangle_grasped_across_short_side() {
        let rect = [
            V2::new(-0.025, -0.06),
            V2::new(0.025, -0.06),
            V2::new(0.025, 0.06),
            V2::new(-0.025, 0.06),
        ];
        let g = GripperSpec::franka_like();
        let samples = polygon_samples(&rect, 50);
        let (grasp, score) = best_grasp_pair(
            &samples,
            &g,
            0.5,
            V2::zeros(),
            0.03,
            &PairWeights::default(),
            0.01,
        )
        .unwrap();
        assert!((score.distance - 0.05).abs() < 1e-9);
        assert!(grasp.angle.abs() < 1e-9 || (grasp.angle - PI).abs() < 1e-9);
        let oracle = brute_force_min(&samples, &g, 0.5, V2::zeros()).unwrap();
        assert!((score.cost - oracle).abs() < 1e-12);
    }

    #[test]
    fn l_shape_matches_exhaustive_oracle() {
        let l = Contour::new(vec![
            V2::new(0.0, 0.0),
            V2::new(0.06, 0.0),
            V2::new(0.06, 0.02),
            V2::new(0.02, 0.02),
            V2::new(0.02, 0.07),
            V2::new(0.0, 0.07),
        ])
        .unwrap();
        let samples = sample_curve(&fit_efd(&l, 20), 360);
        let c = l.centroid();
        let g = GripperSpec::franka_like();
        let (_, score) =
            best_grasp_pair(&samples, &g, 0.4, c, 0.0, &PairWeights::default(), 0.01).unwrap();
        let oracle = brute_force_min(&samples, &g, 0.4, c).unwrap();
        assert!((score.cost - oracle).abs() < 1e-9);
    }

    #[test]
    fn nothing_fits_a_narrow_stroke() {
        let mut g = GripperSpec::franka_like();
        g.max_opening = 0.01;
        let r = best_grasp_pair(
            &circle_samples(0.02, 90),
            &g,
            0.5,
            V2::zeros(),
            0.0,
            &PairWeights::default(),
            0.01,
        );
        assert!(matches!(r, Err(PlanError::NoGraspFound(_))));
    }

    fn random_blob() -> impl Strategy<Value = Vec<ContactCandidate>> {
        prop::collection::vec(0.015f64..0.035, 8..16).prop_map(|radii| {
            let n = radii.len();
            let poly: Vec<V2> = radii
                .iter()
                .enumerate()
                .map(|(k, &r)| {
                    let a = 2.0 * PI * k as f64 / n as f64;
                    V2::new(r * a.cos(), r * a.sin())
                })
                .collect();
            let contour = Contour::new(poly).unwrap();
            sample_curve(&fit_efd(&contour, 12), 90)
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn feasible_set_grows_with_friction(samples in random_blob(), mu1 in 0.05f64..0.6, extra in 0.0f64..0.6) {
            let g = GripperSpec::franka_like();
            let w = PairWeights::default();
            let mu2 = mu1 + extra;
            for a in &samples {
                for b in &samples {
                    let f1 = score_pair(a.point, a.normal, b.point, b.normal, &g, mu1, V2::zeros(), &w).is_some();
                    let f2 = score_pair(a.point, a.normal, b.point, b.normal, &g, mu2, V2::zeros(), &w).is_some();
                    prop_assert!(!f1 || f2);
                }
            }
        }

        #[test]
        fn returned_pair_is_force_closure(samples in random_blob(), mu in 0.2f64..0.8) {
            let g = GripperSpec::franka_like();
            if let Ok((_, s)) = best_grasp_pair(&samples, &g, mu, V2::zeros(), 0.0, &PairWeights::default(), 0.01) {
                let (a, b) = (&samples[s.i], &samples[s.j]);
                let chord = b.point - a.point;
                prop_assert!(angle_between(-a.normal, chord) <= mu.atan() + 1e-12);
                prop_assert!(angle_between(-b.normal, -chord) <= mu.atan() + 1e-12);
                let oracle = brute_force_min(&samples, &g, mu, V2::zeros()).unwrap();
                prop_assert!((s.cost - oracle).abs() < 1e-12);
            }
        }
    }
}
