//! Adapter for planners running as subprocesses that speak newline-delimited
//! JSON over stdin/stdout.
//!
//! Request: `{"type":"plan","width","height","fx","fy","cx","cy","standoff_m",
//! "max_opening_m","depth_b64"}` with the depth as base64 little-endian f32,
//! row-major, NaN = invalid. Response: `{"type":"grasp","x_m","y_m","z_m",
//! "angle_rad","width_m","quality"}` or `{"type":"error","message"}`.

use std::io::{BufRead, BufReader, Write};
use std::process::{Command, Stdio};
use std::sync::mpsc;
use std::thread;
use std::time::Duration;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::{Deserialize, Serialize};

use crate::domain::{Grasp, GripperSpec, Observation, PlanError, Planner};

#[derive(Debug, Serialize)]
pub struct PlanRequest<'a> {
    #[serde(rename = "type")]
    pub kind: &'a str,
    pub width: usize,
    pub height: usize,
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub standoff_m: f64,
    pub max_opening_m: f64,
    pub depth_b64: String,
}

impl<'a> PlanRequest<'a> {
    pub fn new(observation: &Observation, gripper: &GripperSpec) -> Self {
        let cam = &observation.camera;
        let bytes: Vec<u8> = observation
            .depth
            .data()
            .iter()
            .flat_map(|d| d.to_le_bytes())
            .collect();
        Self {
            kind: "plan",
            width: observation.depth.width(),
            height: observation.depth.height(),
            fx: cam.fx,
            fy: cam.fy,
            cx: cam.cx,
            cy: cam.cy,
            standoff_m: cam.standoff,
            max_opening_m: gripper.max_opening,
            depth_b64: STANDARD.encode(bytes),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum PlanResponse {
    Grasp {
        x_m: f64,
        y_m: f64,
        z_m: f64,
        angle_rad: f64,
        width_m: f64,
        quality: f64,
    },
    Error {
        message: String,
    },
}

impl PlanResponse {
    pub fn from_grasp(g: &Grasp) -> Self {
        PlanResponse::Grasp {
            x_m: g.x,
            y_m: g.y,
            z_m: g.z,
            angle_rad: g.angle,
            width_m: g.width,
            quality: g.quality,
        }
    }
}

/// Validates a response line against the grasp invariants.
pub fn parse_response(
    line: &str,
    gripper: &GripperSpec,
    normalize_angle: bool,
) -> Result<Grasp, PlanError> {
    let resp: PlanResponse = serde_json::from_str(line.trim())
        .map_err(|e| PlanError::Protocol(format!("{e}: {:?}", line.trim())))?;
    match resp {
        PlanResponse::Error { message } => Err(PlanError::RemoteFailure(message)),
        PlanResponse::Grasp {
            x_m,
            y_m,
            z_m,
            angle_rad,
            width_m,
            quality,
        } => {
            if !(0.0..std::f64::consts::PI).contains(&angle_rad) && !normalize_angle {
                return Err(PlanError::Protocol(format!(
                    "angle {angle_rad} outside [0, π)"
                )));
            }
            let g = Grasp::new(x_m, y_m, z_m, angle_rad, width_m, quality);
            g.validate(gripper)
                .map_err(|e| PlanError::Protocol(e.to_string()))?;
            Ok(g)
        }
    }
}

/// Runs `sh -c <command>` once per plan call.
#[derive(Debug, Clone)]
pub struct ExternalPlanner {
    pub command: String,
    pub timeout: Duration,
    /// Fold out-of-range angles into [0, π) instead of rejecting them.
    pub normalize_angle: bool,
}

impl ExternalPlanner {
    pub fn new(command: impl Into<String>, timeout: Duration) -> Self {
        Self {
            command: command.into(),
            timeout,
            normalize_angle: false,
        }
    }
}

impl Planner for ExternalPlanner {
    fn name(&self) -> &str {
        "external"
    }

    fn plan(&self, observation: &Observation, gripper: &GripperSpec) -> Result<Grasp, PlanError> {
        let mut line = serde_json::to_string(&PlanRequest::new(observation, gripper))
            .map_err(|e| PlanError::Io(e.to_string()))?;
        line.push('\n');

        let mut child = Command::new("sh")
            .arg("-c")
            .arg(&self.command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| PlanError::Io(format!("spawning `{}`: {e}", self.command)))?;
        let mut stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");

        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            // A planner that never reads its input closes the pipe early.
            let _ = stdin.write_all(line.as_bytes()).and_then(|_| stdin.flush());
            drop(stdin);
            let mut reply = String::new();
            let r = BufReader::new(stdout).read_line(&mut reply).map(|_| reply);
            let _ = tx.send(r);
        });

        let reply = match rx.recv_timeout(self.timeout) {
            Ok(r) => r,
            Err(_) => {
                let _ = child.kill();
                let _ = child.wait();
                return Err(PlanError::Timeout(self.timeout));
            }
        };
        let _ = child.kill();
        let _ = child.wait();
        let reply = reply.map_err(|e| PlanError::Io(e.to_string()))?;
        if reply.trim().is_empty() {
            return Err(PlanError::Protocol(
                "planner closed stdout without a response".into(),
            ));
        }
        parse_response(&reply, gripper, self.normalize_angle)
    }
}
