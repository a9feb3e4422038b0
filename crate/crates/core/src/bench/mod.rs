//! Benchmark harness: runs the six-pose protocol for an experiment
//! configuration, referees every grasp and aggregates GS/GSS.

mod report;

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{CameraModel, Grasp, GripperSpec, Planner};
use crate::external::ExternalPlanner;
use crate::maskgrasp::{MaskConfig, MaskPlanner};
use crate::preprocess::{prepare, PreprocessConfig};
use crate::scene::{
    apply_noise, default_catalog, default_grippers, default_noise_profiles, protocol_poses,
    render_depth, NoiseProfile, ObjectModel, ScenePose, DEFAULT_PROTOCOL_RADIUS,
    DEFAULT_PROTOCOL_THETA,
};
use crate::stability::{evaluate, GraspOutcome, StabilityConfig};
use crate::topsurface::{TopSurfaceConfig, TopSurfacePlanner};

pub use report::{export_csv, export_table_csv, score, BenchReport, ObjectSummary, Summary};

pub const POSES_PER_TRIAL: usize = 6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BenchError {
    #[error("unknown object `{name}`; catalog: {available}")]
    UnknownObject { name: String, available: String },
    #[error("unknown noise profile `{name}`; available: {available}")]
    UnknownNoise { name: String, available: String },
    #[error("unknown gripper `{name}`; available: {available}")]
    UnknownGripper { name: String, available: String },
    #[error("unknown planner `{0}`; use topsurface, mask or external:<command>")]
    UnknownPlanner(String),
    #[error("invalid experiment: {0}")]
    Invalid(String),
    #[error("no records to score")]
    EmptyRecords,
}

/// One row of the experiment matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub planner: String,
    pub noise: String,
    pub gripper: String,
    pub objects: Vec<String>,
    pub radius_m: f64,
    pub theta_rad: f64,
    pub trials: u32,
    pub master_seed: u64,
}

impl ExperimentConfig {
    /// Defaults for `planner` over the full catalog, clean, franka-like.
    pub fn new(planner: impl Into<String>) -> Self {
        Self {
            planner: planner.into(),
            noise: "clean".into(),
            gripper: "franka-like".into(),
            objects: crate::scene::OBJECT_NAMES
                .iter()
                .map(|s| s.to_string())
                .collect(),
            radius_m: DEFAULT_PROTOCOL_RADIUS,
            theta_rad: DEFAULT_PROTOCOL_THETA,
            trials: 3,
            master_seed: 0,
        }
    }

    /// `planner/noise/gripper`.
    pub fn id(&self) -> String {
        format!("{}/{}/{}", self.planner, self.noise, self.gripper)
    }

    pub fn record_count(&self) -> usize {
        self.objects.len() * POSES_PER_TRIAL * self.trials as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExternalSettings {
    pub timeout_s: f64,
    /// Fold out-of-range angles instead of rejecting the response.
    pub normalize_angle: bool,
}

impl Default for ExternalSettings {
    fn default() -> Self {
        Self {
            timeout_s: 30.0,
            normalize_angle: false,
        }
    }
}

/// Parameters of every planner the harness can build.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlannerSettings {
    pub topsurface: TopSurfaceConfig,
    pub mask: MaskConfig,
    pub external: ExternalSettings,
}

impl PlannerSettings {
    /// `topsurface`, `mask`, or `external:<shell command>`.
    pub fn build(&self, id: &str) -> Result<Box<dyn Planner>, BenchError> {
        match id {
            "topsurface" => Ok(Box::new(TopSurfacePlanner::new(self.topsurface))),
            "mask" => Ok(Box::new(MaskPlanner::new(self.mask.clone()))),
            _ => match id.strip_prefix("external:") {
                Some(cmd) if !cmd.trim().is_empty() => {
                    if !(self.external.timeout_s > 0.0 && self.external.timeout_s.is_finite()) {
                        return Err(BenchError::Invalid(
                            "external timeout must be positive".into(),
                        ));
                    }
                    let mut p =
                        ExternalPlanner::new(cmd, Duration::from_secs_f64(self.external.timeout_s));
                    p.normalize_angle = self.external.normalize_angle;
                    Ok(Box::new(p))
                }
                _ => Err(BenchError::UnknownPlanner(id.to_string())),
            },
        }
    }
}

/// Everything an experiment id can refer to, plus pipeline parameters.
#[derive(Debug, Clone)]
pub struct BenchSetup {
    pub objects: BTreeMap<String, ObjectModel>,
    pub noise: BTreeMap<String, NoiseProfile>,
    pub grippers: BTreeMap<String, GripperSpec>,
    pub camera: CameraModel,
    pub preprocess: PreprocessConfig,
    pub stability: StabilityConfig,
    pub planners: PlannerSettings,
    /// Store wall-clock timings in records. Off keeps reports byte-stable.
    pub record_timings: bool,
}

impl Default for BenchSetup {
    fn default() -> Self {
        Self {
            objects: default_catalog()
                .into_iter()
                .map(|o| (o.name().to_string(), o))
                .collect(),
            noise: default_noise_profiles().into_iter().collect(),
            grippers: default_grippers().into_iter().collect(),
            camera: CameraModel::default(),
            preprocess: PreprocessConfig::default(),
            stability: StabilityConfig::default(),
            planners: PlannerSettings::default(),
            record_timings: false,
        }
    }
}

fn names<V>(m: &BTreeMap<String, V>) -> String {
    m.keys().cloned().collect::<Vec<_>>().join(", ")
}

impl BenchSetup {
    pub fn object(&self, name: &str) -> Result<&ObjectModel, BenchError> {
        self.objects
            .get(name)
            .ok_or_else(|| BenchError::UnknownObject {
                name: name.into(),
                available: names(&self.objects),
            })
    }

    pub fn noise_profile(&self, name: &str) -> Result<&NoiseProfile, BenchError> {
        self.noise
            .get(name)
            .ok_or_else(|| BenchError::UnknownNoise {
                name: name.into(),
                available: names(&self.noise),
            })
    }

    pub fn gripper(&self, name: &str) -> Result<&GripperSpec, BenchError> {
        self.grippers
            .get(name)
            .ok_or_else(|| BenchError::UnknownGripper {
                name: name.into(),
                available: names(&self.grippers),
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Timings {
    pub preprocess_ms: f64,
    pub plan_ms: f64,
    pub evaluate_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentRecord {
    pub object: String,
    /// Protocol pose, 1..=6.
    pub pose: u8,
    /// 1-based.
    pub trial: u32,
    pub seed: u64,
    pub placement: ScenePose,
    pub grasp: Option<Grasp>,
    /// Error kind or first failed stage; absent when all three stages held.
    pub failure: Option<String>,
    pub detail: Option<String>,
    pub outcome: GraspOutcome,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timings: Option<Timings>,
}

fn fnv1a(bytes: &[u8], mut h: u64) -> u64 {
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stable per-experiment seed: FNV-1a over (master seed, object name, pose,
/// trial), finished with a SplitMix64 step.
pub fn experiment_seed(master_seed: u64, object: &str, pose: u8, trial: u32) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325;
    h = fnv1a(&master_seed.to_le_bytes(), h);
    h = fnv1a(object.as_bytes(), h);
    h = fnv1a(&[0xff, pose], h);
    h = fnv1a(&trial.to_le_bytes(), h);
    splitmix64(h)
}

fn validate(cfg: &ExperimentConfig, setup: &BenchSetup) -> Result<(), BenchError> {
    if cfg.trials < 1 {
        return Err(BenchError::Invalid("trials must be >= 1".into()));
    }
    if cfg.objects.is_empty() {
        return Err(BenchError::Invalid("no objects listed".into()));
    }
    if !(cfg.radius_m.is_finite() && cfg.radius_m >= 0.0 && cfg.theta_rad.is_finite()) {
        return Err(BenchError::Invalid(
            "protocol radius and theta must be finite, radius >= 0".into(),
        ));
    }
    for o in &cfg.objects {
        setup.object(o)?;
    }
    setup
        .noise_profile(&cfg.noise)?
        .validate()
        .map_err(|e| BenchError::Invalid(e.to_string()))?;
    setup
        .gripper(&cfg.gripper)?
        .validate()
        .map_err(|e| BenchError::Invalid(e.to_string()))?;
    setup
        .camera
        .validate()
        .map_err(|e| BenchError::Invalid(e.to_string()))?;
    for p in protocol_poses(cfg.radius_m, cfg.theta_rad) {
        if !p.in_workspace() {
            return Err(BenchError::Invalid(format!(
                "pose ({:.3}, {:.3}) outside the workspace",
                p.x, p.y
            )));
        }
    }
    Ok(())
}

/// Runs the protocol with the planner named in `cfg`.
pub fn run_protocol(
    cfg: &ExperimentConfig,
    setup: &BenchSetup,
) -> Result<Vec<ExperimentRecord>, BenchError> {
    let planner = setup.planners.build(&cfg.planner)?;
    run_protocol_with_planner(cfg, setup, planner.as_ref())
}

/// Runs `objects × 6 poses × trials` experiments with `planner`. Per-record
/// failures land in the records; only an invalid configuration is an error.
pub fn run_protocol_with_planner(
    cfg: &ExperimentConfig,
    setup: &BenchSetup,
    planner: &dyn Planner,
) -> Result<Vec<ExperimentRecord>, BenchError> {
    validate(cfg, setup)?;
    let poses = protocol_poses(cfg.radius_m, cfg.theta_rad);
    let profile = *setup.noise_profile(&cfg.noise)?;
    let gripper = setup.gripper(&cfg.gripper)?;

    // Clean renders are shared by every trial of an (object, pose).
    let scenes: Vec<(usize, usize)> = (0..cfg.objects.len())
        .flat_map(|o| (0..POSES_PER_TRIAL).map(move |p| (o, p)))
        .collect();
    let renders = crate::par::map_slice(&scenes, |&(o, p)| {
        render_depth(
            setup.object(&cfg.objects[o]).expect("validated"),
            poses[p],
            &setup.camera,
        )
    });

    let jobs: Vec<(usize, usize, u32)> = scenes
        .iter()
        .flat_map(|&(o, p)| (1..=cfg.trials).map(move |t| (o, p, t)))
        .collect();
    let records = crate::par::map_slice(&jobs, |&(o, p, trial)| {
        let name = &cfg.objects[o];
        let object = setup.object(name).expect("validated");
        let pose_ix = (p + 1) as u8;
        let seed = experiment_seed(cfg.master_seed, name, pose_ix, trial);
        let clean = &renders[o * POSES_PER_TRIAL + p];
        let mut rec = ExperimentRecord {
            object: name.clone(),
            pose: pose_ix,
            trial,
            seed,
            placement: poses[p],
            grasp: None,
            failure: None,
            detail: None,
            outcome: GraspOutcome::failed(),
            timings: None,
        };
        let fail = |rec: &mut ExperimentRecord, kind: &str, detail: String| {
            rec.failure = Some(kind.to_string());
            rec.detail = Some(detail);
        };

        let t0 = Instant::now();
        let noisy = apply_noise(clean, &profile.with_seed(seed ^ profile.seed));
        let obs = prepare(&noisy, &setup.camera, &setup.preprocess);
        let t1 = Instant::now();
        let grasp = obs
            .map_err(|e| (e.kind(), e.to_string()))
            .and_then(|obs| {
                planner
                    .plan(&obs, gripper)
                    .map_err(|e| (e.kind(), e.to_string()))
            })
            .and_then(|g| {
                g.validate(gripper)
                    .map(|_| g)
                    .map_err(|e| ("InvalidGrasp", e.to_string()))
            });
        let t2 = Instant::now();
        match grasp {
            Err((kind, detail)) => fail(&mut rec, kind, detail),
            Ok(g) => {
                rec.grasp = Some(g);
                let (contact_err, outcome) =
                    evaluate(object, poses[p], &g, gripper, &setup.stability);
                rec.outcome = outcome;
                if let Some(e) = contact_err {
                    fail(&mut rec, e.kind(), e.to_string());
                } else if !outcome.lifted {
                    fail(&mut rec, "LiftFailed", "object slipped on lift".into());
                } else if !outcome.yaw_held {
                    fail(&mut rec, "YawFailed", "object twisted out on yaw".into());
                } else if !outcome.shake_held {
                    fail(
                        &mut rec,
                        "ShakeFailed",
                        "object dropped while shaking".into(),
                    );
                }
            }
        }
        if setup.record_timings {
            let ms = |d: Duration| d.as_secs_f64() * 1e3;
            rec.timings = Some(Timings {
                preprocess_ms: ms(t1 - t0),
                plan_ms: ms(t2 - t1),
                evaluate_ms: ms(t2.elapsed()),
            });
        }
        rec
    });
    Ok(records)
}

/// Runs the protocol and aggregates the report.
pub fn run_report(cfg: &ExperimentConfig, setup: &BenchSetup) -> Result<BenchReport, BenchError> {
    let records = run_protocol(cfg, setup)?;
    BenchReport::new(cfg.clone(), records)
}
