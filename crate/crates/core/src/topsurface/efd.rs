//! Elliptical Fourier analysis of closed contours and arc-length sampling of
//! the fitted series.

use std::f64::consts::PI;

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use super::Contour;

type V2 = Vector2<f64>;

/// Harmonic coefficients `(a_n, b_n, c_n, d_n)` of
/// `x(s) = A0 + Σ a_n cos 2πns + b_n sin 2πns`, `y(s) = C0 + Σ c_n cos 2πns + d_n sin 2πns`
/// for `s ∈ [0, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfdCoefficients {
    pub a0: f64,
    pub c0: f64,
    pub harmonics: Vec<[f64; 4]>,
}

/// A sampled point of the fitted curve with its outward unit normal and
/// signed curvature (positive where the curve is convex).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactCandidate {
    pub point: V2,
    pub normal: V2,
    pub curvature: f64,
    pub arc_param: f64,
}

/// Kuhl–Giardina elliptical Fourier coefficients of the closed polygon,
/// parameterized by normalized arc length.
pub fn fit_efd(contour: &Contour, harmonics: usize) -> EfdCoefficients {
    let v = contour.vertices();
    let n = v.len();
    let mut dx = Vec::with_capacity(n);
    let mut dy = Vec::with_capacity(n);
    let mut dt = Vec::with_capacity(n);
    let mut t = Vec::with_capacity(n + 1);
    t.push(0.0);
    let mut a0 = 0.0;
    let mut c0 = 0.0;
    for i in 0..n {
        let p = v[i];
        let q = v[(i + 1) % n];
        let d = q - p;
        let len = d.norm();
        if len == 0.0 {
            continue;
        }
        dx.push(d.x);
        dy.push(d.y);
        dt.push(len);
        t.push(t.last().unwrap() + len);
        a0 += 0.5 * (p.x + q.x) * len;
        c0 += 0.5 * (p.y + q.y) * len;
    }
    let total = *t.last().unwrap();
    a0 /= total;
    c0 /= total;

    let coeffs = (1..=harmonics)
        .map(|k| {
            let kf = k as f64;
            let w = 2.0 * kf * PI / total;
            let scale = total / (2.0 * kf * kf * PI * PI);
            let mut h = [0.0; 4];
            for p in 0..dt.len() {
                let (c1, s1) = ((w * t[p + 1]).cos(), (w * t[p + 1]).sin());
                let (c0_, s0_) = ((w * t[p]).cos(), (w * t[p]).sin());
                let rx = dx[p] / dt[p];
                let ry = dy[p] / dt[p];
                h[0] += rx * (c1 - c0_);
                h[1] += rx * (s1 - s0_);
                h[2] += ry * (c1 - c0_);
                h[3] += ry * (s1 - s0_);
            }
            h.map(|x| x * scale)
        })
        .collect();
    EfdCoefficients {
        a0,
        c0,
        harmonics: coeffs,
    }
}

impl EfdCoefficients {
    pub fn order(&self) -> usize {
        self.harmonics.len()
    }

    /// Position and first two derivatives with respect to `s`.
    pub fn eval(&self, s: f64) -> (V2, V2, V2) {
        let mut p = V2::new(self.a0, self.c0);
        let mut d1 = V2::zeros();
        let mut d2 = V2::zeros();
        for (k, h) in self.harmonics.iter().enumerate() {
            let w = 2.0 * PI * (k + 1) as f64;
            let (sn, cs) = (w * s).sin_cos();
            p += V2::new(h[0] * cs + h[1] * sn, h[2] * cs + h[3] * sn);
            d1 += V2::new(-h[0] * sn + h[1] * cs, -h[2] * sn + h[3] * cs) * w;
            d2 -= V2::new(h[0] * cs + h[1] * sn, h[2] * cs + h[3] * sn) * (w * w);
        }
        (p, d1, d2)
    }

    pub fn point(&self, s: f64) -> V2 {
        self.eval(s).0
    }

    /// Semi-axes `(major, minor)` of harmonic `n` (1-based).
    pub fn semi_axes(&self, n: usize) -> (f64, f64) {
        let [a, b, c, d] = self.harmonics[n - 1];
        let m = nalgebra::Matrix2::new(a, b, c, d);
        let sv = m.singular_values();
        (sv.max(), sv.min())
    }

    /// Coefficients shifted by `(dx, dy)`.
    pub fn translated(&self, dx: f64, dy: f64) -> Self {
        Self {
            a0: self.a0 + dx,
            c0: self.c0 + dy,
            harmonics: self.harmonics.clone(),
        }
    }
}

// 5-point Gauss–Legendre nodes and weights on [-1, 1].
const GL_X: [f64; 5] = [
    0.0,
    -0.538_469_310_105_683_1,
    0.538_469_310_105_683_1,
    -0.906_179_845_938_664,
    0.906_179_845_938_664,
];
const GL_W: [f64; 5] = [
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
    0.236_926_885_056_189_1,
];

fn speed(efd: &EfdCoefficients, s: f64) -> f64 {
    efd.eval(s).1.norm()
}

fn arc_length(efd: &EfdCoefficients, a: f64, b: f64) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    GL_X.iter()
        .zip(GL_W)
        .map(|(&x, w)| w * speed(efd, mid + half * x))
        .sum::<f64>()
        * half
}

const ARC_TABLE: usize = 2048;

/// `m` points at uniform arc-length spacing along the fitted curve, starting
/// at `s = 0`, with normals and curvature from the analytic derivatives.
pub fn sample_curve(efd: &EfdCoefficients, m: usize) -> Vec<ContactCandidate> {
    let mut cum = Vec::with_capacity(ARC_TABLE + 1);
    cum.push(0.0);
    for i in 0..ARC_TABLE {
        let a = i as f64 / ARC_TABLE as f64;
        let b = (i + 1) as f64 / ARC_TABLE as f64;
        cum.push(cum[i] + arc_length(efd, a, b));
    }
    let total = cum[ARC_TABLE];
    // Orientation of the fitted curve decides which side is outward.
    let ccw = signed_area_of(efd) >= 0.0;

    (0..m)
        .map(|k| {
            let target = total * k as f64 / m as f64;
            let idx = cum
                .partition_point(|&c| c <= target)
                .saturating_sub(1)
                .min(ARC_TABLE - 1);
            let s0 = idx as f64 / ARC_TABLE as f64;
            let s1 = (idx + 1) as f64 / ARC_TABLE as f64;
            let mut s = s0
                + (target - cum[idx]) / (cum[idx + 1] - cum[idx]).max(f64::MIN_POSITIVE)
                    * (s1 - s0);
            for _ in 0..8 {
                let f = cum[idx] + arc_length(efd, s0, s) - target;
                let v = speed(efd, s);
                if v <= 0.0 {
                    break;
                }
                let step = f / v;
                s -= step;
                if step.abs() < 1e-15 {
                    break;
                }
            }
            let s = s.rem_euclid(1.0);
            let (p, d1, d2) = efd.eval(s);
            let len = d1.norm();
            let mut normal = V2::new(d1.y, -d1.x) / len;
            let mut curvature = d1.perp(&d2) / len.powi(3);
            if !ccw {
                normal = -normal;
                curvature = -curvature;
            }
            ContactCandidate {
                point: p,
                normal,
                curvature,
                arc_param: s,
            }
        })
        .collect()
}

// Green's theorem over the series: A = ½ ∮ (x y' − y x') ds.
fn signed_area_of(efd: &EfdCoefficients) -> f64 {
    let n = 1024;
    (0..n)
        .map(|i| {
            let (p, d, _) = efd.eval(i as f64 / n as f64);
            p.perp(&d)
        })
        .sum::<f64>()
        * 0.5
        / n as f64
}
