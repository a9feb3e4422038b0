use serde::{Deserialize, Serialize};

use super::MaskError;
use crate::domain::{is_valid_depth, CameraModel, DepthImage, GripperSpec};

/// Height above the table per pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct HeightMap {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
    /// Metric pixel size on the table plane.
    pub meters_per_pixel: f64,
    pub camera: CameraModel,
}

impl HeightMap {
    pub fn from_heights(width: usize, height: usize, data: Vec<f64>, camera: CameraModel) -> Self {
        assert_eq!(data.len(), width * height);
        Self {
            width,
            height,
            data,
            meters_per_pixel: camera.meters_per_pixel(),
            camera,
        }
    }

    pub fn max_height(&self) -> f64 {
        self.data.iter().copied().fold(0.0, f64::max)
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> f64 {
        self.data[v * self.width + u]
    }

    /// Binary image of pixels with `h ≥ max(h_max − band, floor)`.
    pub fn band(&self, band: f64, floor: f64) -> Vec<bool> {
        let lim = (self.max_height() - band).max(floor);
        self.data.iter().map(|&h| h >= lim).collect()
    }
}

/// Orthographic height map on the table-plane pixel grid.
///
/// Each pixel is back-projected and `h = max(0, standoff − depth)` lands in
/// the cell above its table position, keeping the highest sample. Table
/// pixels map onto themselves; cells no pixel reaches (occluded table)
/// stay 0.
pub fn height_map(depth: &DepthImage, camera: &CameraModel) -> Result<HeightMap, MaskError> {
    let invalid = depth.invalid_count();
    if invalid > 0 {
        return Err(MaskError::InvalidPixels(invalid));
    }
    let (w, h) = (depth.width(), depth.height());
    let s = camera.standoff;
    let mut data = vec![0.0f64; w * h];
    for (i, &d) in depth.data().iter().enumerate() {
        debug_assert!(is_valid_depth(d));
        let height = (s - d as f64).max(0.0);
        if height == 0.0 {
            continue;
        }
        let p = camera.back_project((i % w) as f64, (i / w) as f64, d as f64);
        let u = (camera.cx + p.x * camera.fx / s).round();
        let v = (camera.cy + p.y * camera.fy / s).round();
        if u >= 0.0 && v >= 0.0 && (u as usize) < w && (v as usize) < h {
            let cell = &mut data[v as usize * w + u as usize];
            *cell = cell.max(height);
        }
    }
    Ok(HeightMap::from_heights(w, h, data, *camera))
}

/// Square weight grid of odd size centred on the grasp point. Positive
/// weights (between the fingers) sum to +1, negative weights (under the
/// fingers) to −1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraspMask {
    pub size: usize,
    pub weights: Vec<f64>,
    pub angle: f64,
    pub opening_m: f64,
    pub opening_px: f64,
}

impl GraspMask {
    pub fn half(&self) -> usize {
        self.size / 2
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.weights[j * self.size + i]
    }

    pub fn positive_sum(&self) -> f64 {
        self.weights.iter().filter(|w| **w > 0.0).sum()
    }

    pub fn negative_sum(&self) -> f64 {
        self.weights.iter().filter(|w| **w < 0.0).sum()
    }

    /// The finger regions alone (negative weights, centre zeroed).
    pub fn finger_part(&self) -> GraspMask {
        GraspMask {
            weights: self.weights.iter().map(|&w| w.min(0.0)).collect(),
            ..self.clone()
        }
    }

    /// Non-zero taps as (dx, dy, weight) offsets from the centre.
    pub fn taps(&self) -> Vec<(isize, isize, f64)> {
        let h = self.half() as isize;
        let mut out = Vec::new();
        for j in 0..self.size {
            for i in 0..self.size {
                let w = self.at(i, j);
                if w != 0.0 {
                    out.push((i as isize - h, j as isize - h, w));
                }
            }
        }
        out
    }
}

fn overlap(a0: f64, a1: f64, b0: f64, b1: f64) -> f64 {
    (a1.min(b1) - a0.max(b0)).max(0.0)
}

/// Gripper-shaped mask for closing direction `angle` and opening `opening`
/// at `scale` meters per pixel.
///
/// The axis-aligned template is rasterized with exact area coverage, rotated
/// by bilinear resampling, then each sign is rescaled to unit mass.
pub fn build_mask(
    gripper: &GripperSpec,
    opening: f64,
    angle: f64,
    scale: f64,
) -> Result<GraspMask, MaskError> {
    if !(scale > 0.0) {
        return Err(MaskError::InvalidScale(scale));
    }
    if opening > gripper.max_opening + 1e-12 {
        return Err(MaskError::OpeningTooLarge {
            opening,
            max: gripper.max_opening,
        });
    }
    let op = opening / scale;
    if op < 3.0 {
        return Err(MaskError::TooSmall(op));
    }
    let fw = gripper.finger_width / scale;
    let ft = gripper.finger_thickness / scale;
    let reach = ((op / 2.0 + ft).powi(2) + (fw / 2.0).powi(2)).sqrt();
    let half = reach.ceil() as usize + 1;
    let size = 2 * half + 1;
    let c = half as f64;

    let mut template = vec![0.0; size * size];
    for j in 0..size {
        for i in 0..size {
            let (x0, x1) = (i as f64 - c - 0.5, i as f64 - c + 0.5);
            let (y0, y1) = (j as f64 - c - 0.5, j as f64 - c + 0.5);
            let wy = overlap(y0, y1, -fw / 2.0, fw / 2.0);
            let centre = overlap(x0, x1, -op / 2.0, op / 2.0);
            let fingers = overlap(x0, x1, op / 2.0, op / 2.0 + ft)
                + overlap(x0, x1, -op / 2.0 - ft, -op / 2.0);
            template[j * size + i] = wy * (centre - fingers);
        }
    }
    let sample = |x: f64, y: f64| -> f64 {
        let (fx, fy) = (x.floor(), y.floor());
        let (tx, ty) = (x - fx, y - fy);
        let at = |i: f64, j: f64| {
            if i < 0.0 || j < 0.0 || i >= size as f64 || j >= size as f64 {
                0.0
            } else {
                template[j as usize * size + i as usize]
            }
        };
        at(fx, fy) * (1.0 - tx) * (1.0 - ty)
            + at(fx + 1.0, fy) * tx * (1.0 - ty)
            + at(fx, fy + 1.0) * (1.0 - tx) * ty
            + at(fx + 1.0, fy + 1.0) * tx * ty
    };
    let (sn, cs) = angle.sin_cos();
    let mut weights = vec![0.0; size * size];
    for j in 0..size {
        for i in 0..size {
            let (dx, dy) = (i as f64 - c, j as f64 - c);
            let lx = cs * dx + sn * dy;
            let ly = -sn * dx + cs * dy;
            let w = sample(lx + c, ly + c);
            weights[j * size + i] = if w.abs() < 1e-12 { 0.0 } else { w };
        }
    }
    let pos: f64 = weights.iter().filter(|w| **w > 0.0).sum();
    let neg: f64 = -weights.iter().filter(|w| **w < 0.0).sum::<f64>();
    for w in &mut weights {
        if *w > 0.0 {
            *w /= pos;
        } else if *w < 0.0 {
            *w /= neg;
        }
    }
    Ok(GraspMask {
        size,
        weights,
        angle,
        opening_m: opening,
        opening_px: op,
    })
}

/// Dense correlation `score(q) = Σ_k w_k · B(q + k)` of the binary image
/// `band` (`width × height`) with `mask`; support outside the image counts
/// as empty.
pub fn score_map(band: &[bool], width: usize, height: usize, mask: &GraspMask) -> Vec<f64> {
    assert_eq!(band.len(), width * height);
    let taps = mask.taps();
    let mut score = vec![0.0; width * height];
    let (w, h) = (width as isize, height as isize);
    for (p, _) in band.iter().enumerate().filter(|(_, b)| **b) {
        let (pu, pv) = ((p % width) as isize, (p / width) as isize);
        for &(dx, dy, wt) in &taps {
            let (qu, qv) = (pu - dx, pv - dy);
            if qu >= 0 && qv >= 0 && qu < w && qv < h {
                score[(qv * w + qu) as usize] += wt;
            }
        }
    }
    score
}
