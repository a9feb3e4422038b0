use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::SceneError;
use crate::domain::{is_valid_depth, DepthImage, INVALID_DEPTH, MAX_VALID_DEPTH};

/// Depth sensor degradation: additive Gaussian noise, random dropout, then a
/// box low-pass over valid neighbours.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseProfile {
    #[serde(rename = "sigma_z_m")]
    pub sigma_z: f64,
    #[serde(rename = "dropout")]
    pub dropout_rate: f64,
    #[serde(rename = "smooth_px")]
    pub smoothing: usize,
    #[serde(default)]
    pub seed: u64,
}

impl Default for NoiseProfile {
    fn default() -> Self {
        Self::clean()
    }
}

impl NoiseProfile {
    pub fn new(sigma_z: f64, dropout_rate: f64, smoothing: usize, seed: u64) -> Self {
        Self {
            sigma_z,
            dropout_rate,
            smoothing,
            seed,
        }
    }

    pub fn clean() -> Self {
        Self::new(0.0, 0.0, 0, 0)
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    pub fn validate(&self) -> Result<(), SceneError> {
        if !(self.sigma_z.is_finite() && self.sigma_z >= 0.0) {
            return Err(SceneError::InvalidNoise(format!(
                "sigma_z {} must be >= 0",
                self.sigma_z
            )));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(SceneError::InvalidNoise(format!(
                "dropout {} outside [0, 1)",
                self.dropout_rate
            )));
        }
        Ok(())
    }

    pub fn is_identity(&self) -> bool {
        self.sigma_z == 0.0 && self.dropout_rate == 0.0 && self.smoothing == 0
    }
}

/// Applies `profile` to `depth`. The output depends only on the input and the
/// profile (including its seed).
///
/// Dropout invalidates exactly `round(rate · pixel_count)` pixels, drawn
/// without replacement from the pixels still valid after the Gaussian step.
pub fn apply_noise(depth: &DepthImage, profile: &NoiseProfile) -> DepthImage {
    if profile.is_identity() {
        return depth.clone();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(profile.seed);
    let (w, h) = (depth.width(), depth.height());
    let mut data = depth.data().to_vec();

    if profile.sigma_z > 0.0 {
        let normal = Normal::new(0.0, profile.sigma_z).expect("finite sigma");
        for d in data.iter_mut() {
            if is_valid_depth(*d) {
                let v = *d as f64 + normal.sample(&mut rng);
                *d = v as f32;
                if !is_valid_depth(*d) {
                    *d = if v > 0.0 {
                        MAX_VALID_DEPTH
                    } else {
                        INVALID_DEPTH
                    };
                }
            }
        }
    }

    if profile.dropout_rate > 0.0 {
        let target = (profile.dropout_rate * (w * h) as f64).round() as usize;
        let valid: Vec<usize> = (0..data.len())
            .filter(|&i| is_valid_depth(data[i]))
            .collect();
        let k = target.min(valid.len());
        for idx in sample(&mut rng, valid.len(), k) {
            data[valid[idx]] = INVALID_DEPTH;
        }
    }

    if profile.smoothing > 0 {
        data = box_smooth(&data, w, h, profile.smoothing);
    }

    DepthImage::from_raw_lossy(w, h, data)
}

// Mean over valid pixels in a (2r+1)² window; invalid pixels stay invalid.
fn box_smooth(data: &[f32], w: usize, h: usize, r: usize) -> Vec<f32> {
    let mut out = vec![0.0f32; data.len()];
    crate::par::for_each_row(&mut out, w, |v, row| {
        let v0 = v.saturating_sub(r);
        let v1 = (v + r).min(h - 1);
        for (u, o) in row.iter_mut().enumerate() {
            let centre = data[v * w + u];
            if !is_valid_depth(centre) {
                *o = centre;
                continue;
            }
            let u0 = u.saturating_sub(r);
            let u1 = (u + r).min(w - 1);
            let mut sum = 0.0f64;
            let mut n = 0u32;
            for vv in v0..=v1 {
                for &d in &data[vv * w + u0..=vv * w + u1] {
                    if is_valid_depth(d) {
                        sum += d as f64;
                        n += 1;
                    }
                }
            }
            *o = (sum / n as f64) as f32;
        }
    });
    out
}
