//! Mask planner: gripper-shaped weighted masks correlated densely with the
//! top height band at several openings and rotations.

mod mask;

use std::cmp::Ordering;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{Grasp, GripperSpec, Observation, PlanError, Planner};

pub use mask::{build_mask, height_map, score_map, GraspMask, HeightMap};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MaskError {
    #[error("{0} invalid pixels in the depth image")]
    InvalidPixels(usize),
    #[error("opening of {0:.2} px is below 3 px")]
    TooSmall(f64),
    #[error("opening {opening} exceeds the gripper stroke {max}")]
    OpeningTooLarge { opening: f64, max: f64 },
    #[error("scale {0} must be positive")]
    InvalidScale(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MaskConfig {
    /// Rotations, uniform over [0, π).
    pub angles: usize,
    pub openings_m: Vec<f64>,
    /// Also try the gripper's full stroke.
    pub include_max_opening: bool,
    /// Thickness of the top height band.
    pub band_m: f64,
    /// Heights below this never enter the band.
    pub min_height_m: f64,
    /// How far below the band top the fingertips go (capped at half the
    /// object height).
    pub engagement_m: f64,
    /// Scores this close to a map's maximum count as ties.
    pub plateau_tol: f64,
    /// Only placements whose finger regions, grown by `finger_margin_m` on
    /// every side, are clear of the band are eligible.
    pub clear_fingers: bool,
    pub finger_margin_m: f64,
}

impl Default for MaskConfig {
    fn default() -> Self {
        Self {
            angles: 16,
            openings_m: vec![0.03, 0.05, 0.07],
            include_max_opening: true,
            band_m: 0.02,
            min_height_m: 0.01,
            engagement_m: 0.015,
            plateau_tol: 1e-9,
            clear_fingers: true,
            finger_margin_m: 0.005,
        }
    }
}

impl MaskConfig {
    /// Openings actually evaluated for `gripper`, ascending and deduplicated.
    pub fn openings_for(&self, gripper: &GripperSpec) -> Vec<f64> {
        let mut v: Vec<f64> = self
            .openings_m
            .iter()
            .copied()
            .filter(|&o| o > 0.0 && o <= gripper.max_opening)
            .collect();
        if self.include_max_opening {
            v.push(gripper.max_opening);
        }
        v.sort_by(f64::total_cmp);
        v.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        v
    }
}

/// Winning placement of one (angle, opening) score map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaskCandidate {
    pub angle_index: usize,
    pub angle: f64,
    pub opening: f64,
    pub u: usize,
    pub v: usize,
    pub score: f64,
}

// Sets every cell to −∞ except the clear-fingered cells within `tol` of the
// best clear score. Cells are visited in descending score order, so only the
// top of the map is ever checked against the band.
fn keep_clear_cells(
    score: &mut [f64],
    band: &[bool],
    width: usize,
    height: usize,
    fingers: &[(isize, isize, f64)],
    tol: f64,
) {
    let overlap = |q: usize| -> f64 {
        let (qu, qv) = ((q % width) as isize, (q / width) as isize);
        fingers
            .iter()
            .filter(|&&(dx, dy, _)| {
                let (u, v) = (qu + dx, qv + dy);
                u >= 0
                    && v >= 0
                    && (u as usize) < width
                    && (v as usize) < height
                    && band[v as usize * width + u as usize]
            })
            .map(|t| t.2)
            .sum()
    };
    let mut order: Vec<usize> = (0..score.len()).filter(|&i| score[i] > 0.0).collect();
    order.sort_by(|&a, &b| score[b].total_cmp(&score[a]).then(a.cmp(&b)));
    let mut best: Option<f64> = None;
    let mut keep = Vec::new();
    for q in order {
        if best.is_some_and(|b| score[q] < b - tol) {
            break;
        }
        if overlap(q) >= -1e-9 {
            best.get_or_insert(score[q]);
            keep.push(q);
        }
    }
    let kept: Vec<(usize, f64)> = keep.into_iter().map(|q| (q, score[q])).collect();
    score.fill(f64::NEG_INFINITY);
    for (q, s) in kept {
        score[q] = s;
    }
}

// Among cells within `tol` of the maximum, the one nearest the centroid of
// those cells; then lowest (row, column).
fn plateau_pick(score: &[f64], width: usize, tol: f64) -> Option<(usize, usize, f64)> {
    let max = score.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return None;
    }
    let cells: Vec<usize> = (0..score.len())
        .filter(|&i| score[i] >= max - tol)
        .collect();
    let n = cells.len() as f64;
    let cu = cells.iter().map(|&i| (i % width) as f64).sum::<f64>() / n;
    let cv = cells.iter().map(|&i| (i / width) as f64).sum::<f64>() / n;
    let best = cells.into_iter().min_by(|&a, &b| {
        let da = ((a % width) as f64 - cu).powi(2) + ((a / width) as f64 - cv).powi(2);
        let db = ((b % width) as f64 - cu).powi(2) + ((b / width) as f64 - cv).powi(2);
        da.total_cmp(&db)
            .then((a / width, a % width).cmp(&(b / width, b % width)))
    })?;
    Some((best % width, best / width, max))
}

/// Best-scoring mask placement over every rotation and opening, converted to
/// a table-frame grasp.
pub fn best_mask_grasp(
    hm: &HeightMap,
    gripper: &GripperSpec,
    cfg: &MaskConfig,
) -> Result<(Grasp, MaskCandidate), PlanError> {
    if cfg.angles < 1 {
        return Err(PlanError::NoGraspFound("no rotations configured".into()));
    }
    let h_max = hm.max_height();
    if h_max < cfg.min_height_m {
        return Err(PlanError::NoGraspFound("nothing above the table".into()));
    }
    let band = hm.band(cfg.band_m, cfg.min_height_m);
    let cam = &hm.camera;
    let scale = hm.meters_per_pixel;
    let openings = cfg.openings_for(gripper);

    let jobs: Vec<(usize, f64)> = (0..cfg.angles)
        .flat_map(|k| openings.iter().map(move |&o| (k, o)))
        .collect();
    let results = crate::par::map_slice(&jobs, |&(k, opening)| {
        let angle = k as f64 * PI / cfg.angles as f64;
        let mask = build_mask(gripper, opening, angle, scale).ok()?;
        let mut score = score_map(&band, hm.width, hm.height, &mask);
        if cfg.clear_fingers {
            let m = cfg.finger_margin_m;
            let grown = GripperSpec {
                finger_width: gripper.finger_width + 2.0 * m,
                finger_thickness: gripper.finger_thickness + 2.0 * m,
                ..*gripper
            };
            let fingers = build_mask(&grown, opening - 2.0 * m, angle, scale)
                .ok()?
                .finger_part()
                .taps();
            keep_clear_cells(
                &mut score,
                &band,
                hm.width,
                hm.height,
                &fingers,
                cfg.plateau_tol,
            );
        }
        let (u, v, s) = plateau_pick(&score, hm.width, cfg.plateau_tol)?;
        Some(MaskCandidate {
            angle_index: k,
            angle,
            opening,
            u,
            v,
            score: s,
        })
    });
    let best = results
        .into_iter()
        .flatten()
        .min_by(|a, b| compare(a, b, cam.cx, cam.cy, cam.fx, cam.fy))
        .ok_or_else(|| PlanError::NoGraspFound("no mask fits the gripper".into()))?;
    if best.score <= 0.0 {
        return Err(PlanError::NoGraspFound(format!(
            "best mask score {:.4} ≤ 0",
            best.score
        )));
    }
    let x = (best.u as f64 - cam.cx) * cam.standoff / cam.fx;
    let y = (best.v as f64 - cam.cy) * cam.standoff / cam.fy;
    let z = h_max - cfg.engagement_m.min(h_max / 2.0);
    let grasp = Grasp::new(x, y, z, best.angle, best.opening, best.score);
    Ok((grasp, best))
}

// Score descending, then (angle, y, x), then opening.
fn compare(a: &MaskCandidate, b: &MaskCandidate, cx: f64, cy: f64, fx: f64, fy: f64) -> Ordering {
    let key = |c: &MaskCandidate| ((c.v as f64 - cy) / fy, (c.u as f64 - cx) / fx);
    let (ay, ax) = key(a);
    let (by, bx) = key(b);
    b.score
        .total_cmp(&a.score)
        .then(a.angle.total_cmp(&b.angle))
        .then(ay.total_cmp(&by))
        .then(ax.total_cmp(&bx))
        .then(a.opening.total_cmp(&b.opening))
}

#[derive(Debug, Clone, Default)]
pub struct MaskPlanner {
    pub config: MaskConfig,
}

impl MaskPlanner {
    pub fn new(config: MaskConfig) -> Self {
        Self { config }
    }
}

impl Planner for MaskPlanner {
    fn name(&self) -> &str {
        "mask"
    }

    fn plan(&self, observation: &Observation, gripper: &GripperSpec) -> Result<Grasp, PlanError> {
        let hm = height_map(&observation.depth, &observation.camera)
            .map_err(|e| PlanError::NoGraspFound(e.to_string()))?;
        best_mask_grasp(&hm, gripper, &self.config).map(|(g, _)| g)
    }
}
