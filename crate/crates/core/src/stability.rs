//! Analytic referee for executed grasps: contacts from the true object
//! geometry, then quasi-static lift, yaw and shake checks.

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{Grasp, GripperSpec};
use crate::scene::{ObjectModel, PlacedObject, ScenePose};

type V2 = Vector2<f64>;

pub const GRAVITY: f64 = 9.81;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ContactError {
    #[error("closing axis misses the object")]
    MissedObject,
    #[error("a finger lands on the object")]
    Collision,
    #[error("object wider than the commanded opening")]
    WidthExceeded,
}

impl ContactError {
    pub fn kind(&self) -> &'static str {
        match self {
            ContactError::MissedObject => "MissedObject",
            ContactError::Collision => "Collision",
            ContactError::WidthExceeded => "WidthExceeded",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Contact {
    pub point: V2,
    /// Outward unit normal of the cross-section.
    pub normal: V2,
    pub patch_radius: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactSet {
    pub contacts: [Contact; 2],
}

impl ContactSet {
    pub fn span(&self) -> f64 {
        (self.contacts[1].point - self.contacts[0].point).norm()
    }

    /// Largest angle between an inward normal and the line to the other
    /// contact.
    pub fn cone_deviation(&self) -> f64 {
        let [a, b] = self.contacts;
        let chord = b.point - a.point;
        let dev = |n: V2, d: V2| (-n).perp(&d).atan2((-n).dot(&d)).abs();
        dev(a.normal, chord).max(dev(b.normal, -chord))
    }

    /// Horizontal distance from `p` to the line through both contacts.
    pub fn axis_offset(&self, p: V2) -> f64 {
        let [a, b] = self.contacts;
        let chord = b.point - a.point;
        (p - a.point).perp(&chord).abs() / chord.norm()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Lift,
    Yaw,
    Shake,
}

/// Dynamic load factors per stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StabilityConfig {
    pub k_lift: f64,
    pub k_yaw: f64,
    pub k_shake: f64,
}

impl Default for StabilityConfig {
    fn default() -> Self {
        Self {
            k_lift: 1.2,
            k_yaw: 1.5,
            k_shake: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GraspOutcome {
    pub lifted: bool,
    pub yaw_held: bool,
    pub shake_held: bool,
    pub points: u8,
}

impl GraspOutcome {
    pub fn from_stages(lifted: bool, yaw_held: bool, shake_held: bool) -> Self {
        let yaw_held = lifted && yaw_held;
        let shake_held = yaw_held && shake_held;
        Self {
            lifted,
            yaw_held,
            shake_held,
            points: lifted as u8 + yaw_held as u8 + shake_held as u8,
        }
    }

    pub fn failed() -> Self {
        Self::default()
    }
}

// Footprint sampling of one finger: along the closing axis × across it.
const FOOT_ALONG: usize = 5;
const FOOT_ACROSS: usize = 7;
const DESCENT_STEP: f64 = 0.002;

/// Where the fingers touch `object` at `pose` when closing `grasp`.
///
/// The fingers descend at ±width/2 to grasp z and close; each stops at the
/// outermost material between them.
pub fn realize_contacts(
    object: &ObjectModel,
    pose: ScenePose,
    grasp: &Grasp,
    gripper: &GripperSpec,
) -> Result<ContactSet, ContactError> {
    if !(grasp.z >= 0.0 && grasp.z < object.height()) {
        return Err(ContactError::MissedObject);
    }
    let placed = PlacedObject::new(object, pose);
    let slice = placed.cross_section(grasp.z);
    let (ax, ay) = grasp.axis();
    let dir = V2::new(ax, ay);
    let across = V2::new(-ay, ax);
    let centre = V2::new(grasp.x, grasp.y);
    let half = grasp.width / 2.0;
    let ft = gripper.finger_thickness;

    let chords = slice.chord_intervals(centre, dir, -half - ft, half + ft);
    let inside: Vec<_> = chords
        .iter()
        .filter(|c| c.t1 > -half && c.t0 < half)
        .collect();
    if inside.is_empty() {
        return Err(ContactError::MissedObject);
    }
    if inside.iter().any(|c| c.t0 < -half || c.t1 > half) {
        return Err(ContactError::WidthExceeded);
    }

    let mut z = grasp.z;
    let top = object.height();
    loop {
        let s = placed.cross_section(z);
        for side in [-1.0, 1.0] {
            for i in 0..FOOT_ALONG {
                let t = side * (half + ft * i as f64 / (FOOT_ALONG - 1) as f64);
                for j in 0..FOOT_ACROSS {
                    let w = gripper.finger_width * (j as f64 / (FOOT_ACROSS - 1) as f64 - 0.5);
                    if s.contains(centre + dir * t + across * w) {
                        return Err(ContactError::Collision);
                    }
                }
            }
        }
        if z >= top {
            break;
        }
        z = (z + DESCENT_STEP).min(top);
    }

    let t_lo = inside.iter().map(|c| c.t0).fold(f64::INFINITY, f64::min);
    let t_hi = inside
        .iter()
        .map(|c| c.t1)
        .fold(f64::NEG_INFINITY, f64::max);
    if t_hi - t_lo < 1e-9 {
        return Err(ContactError::MissedObject);
    }
    let contact = |t: f64| {
        let p = centre + dir * t;
        let mut n = slice.normal(p);
        if n == V2::zeros() {
            n = dir * t.signum();
        }
        Contact {
            point: p,
            normal: n,
            patch_radius: gripper.contact_patch_radius,
        }
    };
    Ok(ContactSet {
        contacts: [contact(t_lo), contact(t_hi)],
    })
}

/// Quasi-static sufficiency of one stage with squeeze force `max_force`
/// per finger. Stages are independent here; the nesting comes from
/// [`run_stability_test`].
pub fn stage_check(
    contacts: &ContactSet,
    object: &PlacedObject<'_>,
    gripper: &GripperSpec,
    stage: Stage,
    cfg: &StabilityConfig,
) -> bool {
    let mu = object.model.friction_mu();
    let weight = object.model.mass_kg() * GRAVITY;
    let grip = 2.0 * mu * gripper.max_force;
    if contacts.cone_deviation() > mu.atan() {
        return false;
    }
    match stage {
        Stage::Lift => grip >= cfg.k_lift * weight,
        Stage::Yaw => {
            let c = object.centroid();
            let d_off = contacts.axis_offset(V2::new(c.x, c.y));
            grip >= cfg.k_lift * weight
                && grip * contacts.contacts[0].patch_radius >= cfg.k_yaw * weight * d_off
        }
        Stage::Shake => grip >= cfg.k_shake * weight,
    }
}

/// Referee for one executed grasp: lift, then yaw, then shake, stopping at
/// the first failure.
pub fn run_stability_test(
    object: &ObjectModel,
    pose: ScenePose,
    grasp: &Grasp,
    gripper: &GripperSpec,
    cfg: &StabilityConfig,
) -> GraspOutcome {
    evaluate(object, pose, grasp, gripper, cfg).1
}

/// Like [`run_stability_test`], also returning why contacts could not be
/// realized.
pub fn evaluate(
    object: &ObjectModel,
    pose: ScenePose,
    grasp: &Grasp,
    gripper: &GripperSpec,
    cfg: &StabilityConfig,
) -> (Option<ContactError>, GraspOutcome) {
    let contacts = match realize_contacts(object, pose, grasp, gripper) {
        Ok(c) => c,
        Err(e) => return (Some(e), GraspOutcome::failed()),
    };
    let placed = PlacedObject::new(object, pose);
    let check = |s| stage_check(&contacts, &placed, gripper, s, cfg);
    let lifted = check(Stage::Lift);
    let yaw_held = lifted && check(Stage::Yaw);
    let shake_held = yaw_held && check(Stage::Shake);
    (
        None,
        GraspOutcome::from_stages(lifted, yaw_held, shake_held),
    )
}
