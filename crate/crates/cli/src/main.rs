//! `graspbench`: scene generation, planning and benchmarking from the shell.
//!
//! Exit codes: 0 ok, 1 IO or configuration error, 2 usage error, 3 no grasp.

use std::fmt::Display;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use graspbench::bench::{BenchSetup, POSES_PER_TRIAL};
use graspbench::config::{report_file_name, write_reports, ConfigError, RunConfig};
use graspbench::external::PlanResponse;
use graspbench::io::{read_gbd1, save_ply, write_gbd1};
use graspbench::preprocess::{prepare, PreprocessError};
use graspbench::scene::{apply_noise, depth_to_cloud, protocol_poses, render_depth};
use graspbench::{CameraModel, PlanError};

#[derive(Debug, Parser)]
#[command(
    name = "graspbench",
    version,
    about = "Top-down grasp planning benchmark on synthetic depth scenes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Render one protocol scene to a GBD1 depth file.
    Scene(SceneArgs),
    /// Plan a grasp on a GBD1 scene and print it as a wire-protocol response.
    Plan(PlanArgs),
    /// Run the configured experiment matrix and write JSON and CSV reports.
    Bench(BenchArgs),
    /// Inspect the run configuration.
    Config {
        #[command(subcommand)]
        action: ConfigAction,
    },
}

#[derive(Debug, Args)]
struct ConfigArg {
    /// TOML run configuration; built-in defaults when omitted.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SceneArgs {
    /// Catalog object name.
    #[arg(long)]
    object: String,
    /// Protocol pose, 1 to 6.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=6))]
    pose: u8,
    /// Noise profile name.
    #[arg(long, default_value = "clean")]
    profile: String,
    /// Noise seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output depth file.
    #[arg(short, long, value_name = "PATH")]
    output: PathBuf,
    /// Also write the back-projected point cloud as ASCII PLY.
    #[arg(long, value_name = "PATH")]
    ply: Option<PathBuf>,
    #[command(flatten)]
    config: ConfigArg,
}

#[derive(Debug, Args)]
struct PlanArgs {
    /// GBD1 depth file.
    scene: PathBuf,
    /// Planner: topsurface, mask or external:<shell command>.
    #[arg(long, default_value = "topsurface")]
    algo: String,
    /// Gripper name.
    #[arg(long, default_value = "franka-like")]
    gripper: String,
    #[command(flatten)]
    config: ConfigArg,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[command(flatten)]
    config: ConfigArg,
    /// Print the planned matrix and exit without running or writing.
    #[arg(long)]
    dry_run: bool,
    /// Override the output directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the number of trials.
    #[arg(long)]
    trials: Option<u32>,
}

#[derive(Debug, Subcommand)]
enum ConfigAction {
    /// Print the effective configuration, defaults included, as TOML.
    Dump(ConfigArg),
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn io(e: impl Display) -> Self {
        Self {
            code: 1,
            message: e.to_string(),
        }
    }
    fn usage(e: impl Display) -> Self {
        Self {
            code: 2,
            message: e.to_string(),
        }
    }
    fn no_grasp(e: impl Display) -> Self {
        Self {
            code: 3,
            message: e.to_string(),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::io(e)
    }
}

fn load_config(arg: &ConfigArg) -> Result<RunConfig, Failure> {
    match &arg.config {
        Some(p) => Ok(RunConfig::load(p)?),
        None => Ok(RunConfig::default()),
    }
}

fn init_threads() -> Result<(), Failure> {
    let Ok(v) = std::env::var("GRASPBENCH_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().ok().filter(|n| *n > 0).ok_or_else(|| {
        Failure::usage(format!(
            "GRASPBENCH_THREADS must be a positive integer, got {v:?}"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(Failure::io)
}

fn cmd_scene(args: &SceneArgs) -> Result<(), Failure> {
    let cfg = load_config(&args.config)?;
    let setup = cfg.setup()?;
    let object = setup.object(&args.object).map_err(Failure::usage)?;
    let profile = setup.noise_profile(&args.profile).map_err(Failure::usage)?;
    let pose =
        protocol_poses(cfg.protocol.radius_m, cfg.protocol.theta_rad)[args.pose as usize - 1];
    let clean = render_depth(object, pose, &setup.camera);
    let depth = apply_noise(&clean, &profile.with_seed(args.seed ^ profile.seed));
    write_gbd1(&args.output, &depth, setup.camera.standoff).map_err(Failure::io)?;
    if let Some(ply) = &args.ply {
        save_ply(ply, &depth_to_cloud(&depth, &setup.camera)).map_err(Failure::io)?;
    }
    Ok(())
}

// Intrinsics for a stored scene: the configured camera, re-centred if the
// file's raster differs, at the file's standoff.
fn scene_camera(cfg: &CameraModel, width: usize, height: usize, standoff: f64) -> CameraModel {
    let same = cfg.width == width && cfg.height == height;
    CameraModel {
        width,
        height,
        cx: if same { cfg.cx } else { width as f64 / 2.0 },
        cy: if same { cfg.cy } else { height as f64 / 2.0 },
        standoff,
        ..*cfg
    }
}

fn cmd_plan(args: &PlanArgs) -> Result<(), Failure> {
    let cfg = load_config(&args.config)?;
    let setup: BenchSetup = cfg.setup()?;
    let gripper = setup.gripper(&args.gripper).map_err(Failure::usage)?;
    let planner = setup.planners.build(&args.algo).map_err(Failure::usage)?;
    let (depth, standoff) = read_gbd1(&args.scene).map_err(Failure::io)?;
    let camera = scene_camera(&setup.camera, depth.width(), depth.height(), standoff);
    camera.validate().map_err(Failure::io)?;

    let result = prepare(&depth, &camera, &setup.preprocess)
        .map_err(|e| match e {
            PreprocessError::InvalidRoi(_) | PreprocessError::InvalidVoxel(_) => Failure::io(e),
            e => Failure::no_grasp(e),
        })
        .and_then(|obs| {
            planner.plan(&obs, gripper).map_err(|e| match e {
                PlanError::NoGraspFound(_) | PlanError::RemoteFailure(_) => Failure::no_grasp(e),
                e => Failure::io(e),
            })
        });
    let response = match &result {
        Ok(g) => PlanResponse::from_grasp(g),
        Err(f) => PlanResponse::Error {
            message: f.message.clone(),
        },
    };
    println!(
        "{}",
        serde_json::to_string(&response).expect("response serializes")
    );
    result.map(|_| ())
}

fn cmd_bench(args: &BenchArgs) -> Result<(), Failure> {
    let mut cfg = load_config(&args.config)?;
    if let Some(s) = args.seed {
        cfg.protocol.master_seed = s;
    }
    if let Some(t) = args.trials {
        cfg.protocol.trials = t;
    }
    if let Some(d) = &args.out {
        cfg.output.dir = d.clone();
    }
    cfg.setup()?;
    let experiments = cfg.experiments();
    if args.dry_run {
        println!(
            "{:<48} {:>7} {:>6} {:>7}",
            "experiment", "objects", "trials", "records"
        );
        for e in &experiments {
            println!(
                "{:<48} {:>7} {:>6} {:>7}",
                e.id(),
                e.objects.len(),
                e.trials,
                e.record_count()
            );
        }
        let total: usize = experiments.iter().map(|e| e.record_count()).sum();
        println!(
            "{} experiments, {} poses each, {total} records",
            experiments.len(),
            POSES_PER_TRIAL
        );
        println!("would write to {}:", cfg.output.dir.display());
        for e in &experiments {
            println!("  {}", report_file_name(e));
        }
        println!("  summary.csv\n  table.csv");
        return Ok(());
    }
    let t = Instant::now();
    let reports = cfg.run()?;
    let written = write_reports(&cfg.output.dir, &reports)?;
    println!(
        "{:<48} {:>7} {:>8} {:>6} {:>6}",
        "experiment", "records", "failures", "GSS", "GS"
    );
    for r in &reports {
        let s = &r.summary;
        println!(
            "{:<48} {:>7} {:>8} {:>6.3} {:>6.3}",
            r.config.id(),
            s.records,
            s.failures,
            s.gss,
            s.gs
        );
    }
    println!("finished in {:.1} s; wrote:", t.elapsed().as_secs_f64());
    for p in written {
        println!("  {}", p.display());
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    init_threads()?;
    match &cli.command {
        Command::Scene(a) => cmd_scene(a),
        Command::Plan(a) => cmd_plan(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Config {
            action: ConfigAction::Dump(a),
        } => {
            print!("{}", load_config(a)?.to_toml());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("graspbench: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
