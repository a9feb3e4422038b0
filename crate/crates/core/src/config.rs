//! TOML run configuration.
//!
//! Every section is optional and merged over the built-in defaults. Entries
//! under `[noise.<name>]`, `[gripper.<name>]` and `[object.<name>]` add to
//! or replace the built-in tables; everything else overrides field by field.
//! Unknown keys are rejected.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bench::{
    export_csv, export_table_csv, run_report, BenchError, BenchReport, BenchSetup,
    ExperimentConfig, PlannerSettings,
};
use crate::domain::{CameraModel, GripperSpec};
use crate::preprocess::PreprocessConfig;
use crate::scene::{
    default_catalog, default_grippers, default_noise_profiles, NoiseProfile, ObjectModel,
    ObjectSpec, DEFAULT_PROTOCOL_RADIUS, DEFAULT_PROTOCOL_THETA, OBJECT_NAMES,
};
use crate::stability::StabilityConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("config: {0}")]
    Invalid(String),
    #[error(transparent)]
    Bench(#[from] BenchError),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ConfigError + '_ {
    move |source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProtocolSection {
    pub radius_m: f64,
    pub theta_rad: f64,
    pub trials: u32,
    pub master_seed: u64,
}

impl Default for ProtocolSection {
    fn default() -> Self {
        Self {
            radius_m: DEFAULT_PROTOCOL_RADIUS,
            theta_rad: DEFAULT_PROTOCOL_THETA,
            trials: 3,
            master_seed: 0,
        }
    }
}

/// The experiment matrix: every planner × noise × gripper combination runs
/// over the object list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MatrixSection {
    pub planners: Vec<String>,
    pub noise: Vec<String>,
    pub grippers: Vec<String>,
    pub objects: Vec<String>,
}

impl Default for MatrixSection {
    fn default() -> Self {
        Self {
            planners: vec!["topsurface".into(), "mask".into()],
            noise: vec!["clean".into()],
            grippers: vec!["franka-like".into()],
            objects: OBJECT_NAMES.iter().map(|s| s.to_string()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    /// Directory for reports, relative to the working directory.
    pub dir: PathBuf,
    /// Store per-record wall-clock timings. Makes reports non-reproducible.
    pub record_timings: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("graspbench-out"),
            record_timings: false,
        }
    }
}

/// Effective run configuration. [`RunConfig::default`] holds every built-in
/// object, noise profile and gripper.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub protocol: ProtocolSection,
    pub matrix: MatrixSection,
    pub camera: CameraModel,
    pub preprocess: PreprocessConfig,
    pub planner: PlannerSettings,
    pub stability: StabilityConfig,
    pub output: OutputSection,
    pub noise: BTreeMap<String, NoiseProfile>,
    pub gripper: BTreeMap<String, GripperSpec>,
    pub object: BTreeMap<String, ObjectSpec>,
}

// What a file may contain: all optional, tables merged by key.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RunConfigFile {
    protocol: ProtocolSection,
    matrix: MatrixSection,
    camera: Option<CameraFile>,
    preprocess: PreprocessConfig,
    planner: PlannerSettings,
    stability: StabilityConfig,
    output: OutputSection,
    noise: BTreeMap<String, NoiseProfile>,
    gripper: BTreeMap<String, GripperSpec>,
    object: BTreeMap<String, ObjectSpec>,
}

// Camera keys are individually optional; cx/cy follow a changed raster.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct CameraFile {
    width: Option<usize>,
    height: Option<usize>,
    fx: Option<f64>,
    fy: Option<f64>,
    cx: Option<f64>,
    cy: Option<f64>,
    standoff_m: Option<f64>,
}

impl CameraFile {
    fn resolve(self) -> CameraModel {
        let d = CameraModel::default();
        let width = self.width.unwrap_or(d.width);
        let height = self.height.unwrap_or(d.height);
        CameraModel {
            width,
            height,
            fx: self.fx.unwrap_or(d.fx),
            fy: self.fy.unwrap_or(d.fy),
            cx: self.cx.unwrap_or(width as f64 / 2.0),
            cy: self.cy.unwrap_or(height as f64 / 2.0),
            standoff: self.standoff_m.unwrap_or(d.standoff),
        }
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            protocol: ProtocolSection::default(),
            matrix: MatrixSection::default(),
            camera: CameraModel::default(),
            preprocess: PreprocessConfig::default(),
            planner: PlannerSettings::default(),
            stability: StabilityConfig::default(),
            output: OutputSection::default(),
            noise: default_noise_profiles().into_iter().collect(),
            gripper: default_grippers().into_iter().collect(),
            object: default_catalog()
                .iter()
                .map(|o| (o.name().to_string(), o.to_spec()))
                .collect(),
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let file: RunConfigFile = toml::from_str(text)?;
        let mut cfg = RunConfig {
            protocol: file.protocol,
            matrix: file.matrix,
            camera: file.camera.map(CameraFile::resolve).unwrap_or_default(),
            preprocess: file.preprocess,
            planner: file.planner,
            stability: file.stability,
            output: file.output,
            ..RunConfig::default()
        };
        cfg.noise.extend(file.noise);
        cfg.gripper.extend(file.gripper);
        cfg.object.extend(file.object);
        cfg.setup()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        Self::from_toml_str(&text)
    }

    /// The effective configuration as TOML; parsing it back gives `self`.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }

    /// Resolves the tables into a harness setup, validating every entry.
    pub fn setup(&self) -> Result<BenchSetup, ConfigError> {
        let objects = self
            .object
            .iter()
            .map(|(name, spec)| {
                ObjectModel::from_spec(name.clone(), spec)
                    .map(|o| (name.clone(), o))
                    .map_err(|e| ConfigError::Invalid(format!("object `{name}`: {e}")))
            })
            .collect::<Result<_, _>>()?;
        for (name, n) in &self.noise {
            n.validate()
                .map_err(|e| ConfigError::Invalid(format!("noise `{name}`: {e}")))?;
        }
        for (name, g) in &self.gripper {
            g.validate()
                .map_err(|e| ConfigError::Invalid(format!("gripper `{name}`: {e}")))?;
        }
        self.camera
            .validate()
            .map_err(|e| ConfigError::Invalid(format!("camera: {e}")))?;
        if self.protocol.trials < 1 {
            return Err(ConfigError::Invalid("protocol.trials must be >= 1".into()));
        }
        for (what, list) in [
            ("planners", &self.matrix.planners),
            ("noise", &self.matrix.noise),
            ("grippers", &self.matrix.grippers),
            ("objects", &self.matrix.objects),
        ] {
            if list.is_empty() {
                return Err(ConfigError::Invalid(format!("matrix.{what} is empty")));
            }
        }
        let setup = BenchSetup {
            objects,
            noise: self.noise.clone(),
            grippers: self.gripper.clone(),
            camera: self.camera,
            preprocess: self.preprocess,
            stability: self.stability,
            planners: self.planner.clone(),
            record_timings: self.output.record_timings,
        };
        for e in self.experiments() {
            setup.planners.build(&e.planner)?;
            setup.noise_profile(&e.noise)?;
            setup.gripper(&e.gripper)?;
            for o in &e.objects {
                setup.object(o)?;
            }
        }
        Ok(setup)
    }

    /// Matrix rows in planner, noise, gripper order.
    pub fn experiments(&self) -> Vec<ExperimentConfig> {
        let m = &self.matrix;
        let mut out = Vec::new();
        for planner in &m.planners {
            for noise in &m.noise {
                for gripper in &m.grippers {
                    out.push(ExperimentConfig {
                        planner: planner.clone(),
                        noise: noise.clone(),
                        gripper: gripper.clone(),
                        objects: m.objects.clone(),
                        radius_m: self.protocol.radius_m,
                        theta_rad: self.protocol.theta_rad,
                        trials: self.protocol.trials,
                        master_seed: self.protocol.master_seed,
                    });
                }
            }
        }
        out
    }

    /// Runs every matrix row.
    pub fn run(&self) -> Result<Vec<BenchReport>, ConfigError> {
        let setup = self.setup()?;
        self.experiments()
            .iter()
            .map(|e| run_report(e, &setup).map_err(ConfigError::from))
            .collect()
    }
}

/// File name for one experiment's JSON report.
pub fn report_file_name(cfg: &ExperimentConfig) -> String {
    let slug: String = cfg
        .id()
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || "-_.@".contains(c) {
                c
            } else {
                '_'
            }
        })
        .collect();
    format!("report_{slug}.json")
}

/// Writes one JSON report per experiment plus `summary.csv` (one row per
/// experiment and object) and `table.csv` (objects × experiments). Returns
/// the written paths.
pub fn write_reports(dir: &Path, reports: &[BenchReport]) -> Result<Vec<PathBuf>, ConfigError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut written = Vec::new();
    for r in reports {
        let path = dir.join(report_file_name(&r.config));
        fs::write(&path, r.to_json()).map_err(io_err(&path))?;
        written.push(path);
    }
    let csv_err = |path: &Path, e: csv::Error| ConfigError::Io {
        path: path.display().to_string(),
        source: std::io::Error::other(e.to_string()),
    };
    let path = dir.join("summary.csv");
    let mut buf = Vec::new();
    export_csv(&mut buf, reports).map_err(|e| csv_err(&path, e))?;
    fs::write(&path, buf).map_err(io_err(&path))?;
    written.push(path);
    let path = dir.join("table.csv");
    let mut buf = Vec::new();
    export_table_csv(&mut buf, reports).map_err(|e| csv_err(&path, e))?;
    fs::write(&path, buf).map_err(io_err(&path))?;
    written.push(path);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_the_default() {
        assert_eq!(RunConfig::from_toml_str("").unwrap(), RunConfig::default());
    }

    #[test]
    fn dump_round_trips() {
        let d = RunConfig::default();
        let text = d.to_toml();
        assert_eq!(RunConfig::from_toml_str(&text).unwrap(), d);
        for section in [
            "[protocol]",
            "[matrix]",
            "[camera]",
            "[planner.mask]",
            "[noise.clean]",
            "[gripper.franka-like]",
        ] {
            assert!(text.contains(section), "{section} missing");
        }
    }

    #[test]
    fn default_matrix_counts() {
        let d = RunConfig::default();
        let ex = d.experiments();
        assert_eq!(ex.len(), 2);
        assert_eq!(ex.iter().map(|e| e.record_count()).sum::<usize>(), 360);
        assert_eq!(ex[0].id(), "topsurface/clean/franka-like");
    }

    #[test]
    fn overrides_merge() {
        let text = r#"
[protocol]
trials = 1

[matrix]
planners = ["mask"]
objects = ["ball", "cube"]

[camera]
width = 320
height = 240

[noise.grainy]
sigma_z_m = 0.002
dropout = 0.01
smooth_px = 1

[object.cube]
mass_kg = 0.1
mu = 0.5
[[object.cube.primitive]]
kind = "box"
center = [0.0, 0.0, 0.025]
half_extents = [0.025, 0.025, 0.025]

[planner.mask]
angles = 8
"#;
        let c = RunConfig::from_toml_str(text).unwrap();
        assert_eq!(c.protocol.trials, 1);
        assert_eq!(c.protocol.radius_m, DEFAULT_PROTOCOL_RADIUS);
        assert_eq!(
            (c.camera.cx, c.camera.cy, c.camera.fx),
            (160.0, 120.0, 500.0)
        );
        assert!(c.noise.contains_key("grainy") && c.noise.contains_key("clean"));
        assert_eq!(c.object.len(), OBJECT_NAMES.len() + 1);
        assert_eq!(c.planner.mask.angles, 8);
        assert_eq!(c.planner.mask.openings_m, vec![0.03, 0.05, 0.07]);
        assert_eq!(c.experiments().len(), 1);
    }

    #[test]
    fn rejects_unknown_keys_and_ids() {
        for bad in [
            "[protocol]\ntrails = 3\n",
            "[nonsense]\n",
            "[planner.mask]\nangels = 4\n",
            "[camera]\nfocal = 3\n",
        ] {
            assert!(
                matches!(RunConfig::from_toml_str(bad), Err(ConfigError::Parse(_))),
                "{bad}"
            );
        }
        let unknown = RunConfig::from_toml_str("[matrix]\nobjects = [\"anvil\"]\n").unwrap_err();
        assert!(unknown.to_string().contains("banana"), "{unknown}");
        assert!(RunConfig::from_toml_str("[matrix]\nplanners = [\"magic\"]\n").is_err());
        assert!(RunConfig::from_toml_str("[protocol]\ntrials = 0\n").is_err());
    }

    #[test]
    fn report_files() {
        let cfg = ExperimentConfig::new("external:./p --x");
        assert_eq!(
            report_file_name(&cfg),
            "report_external_._p_--x_clean_franka-like.json"
        );
    }
}
