use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use graspbench::io::write_gbd1;
use graspbench::DepthImage;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_graspbench"));
    c.env_remove("GRASPBENCH_THREADS");
    c
}

fn run(args: &[&str], cwd: &Path) -> Output {
    bin().args(args).current_dir(cwd).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn text(b: &[u8]) -> String {
    String::from_utf8_lossy(b).into_owned()
}

const CUBE: &str = r#"
[object.cube]
mass_kg = 0.1
mu = 0.6
[[object.cube.primitive]]
kind = "box"
center = [0.0, 0.0, 0.025]
half_extents = [0.025, 0.025, 0.025]
"#;

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(&[], dir.path())), 2);
    assert_eq!(
        code(&run(
            &["scene", "--object", "ball", "--pose", "7", "-o", "x"],
            dir.path()
        )),
        2
    );
    assert_eq!(code(&run(&["bench", "--frobnicate"], dir.path())), 2);

    let o = run(
        &["scene", "--object", "anvil", "--pose", "1", "-o", "x.gbd1"],
        dir.path(),
    );
    assert_eq!(code(&o), 2);
    let err = text(&o.stderr);
    for name in ["ball", "mug", "mustard", "xl_clamp"] {
        assert!(err.contains(name), "{err}");
    }
    assert!(!dir.path().join("x.gbd1").exists());

    let o = run(
        &[
            "scene",
            "--object",
            "ball",
            "--pose",
            "1",
            "--profile",
            "fog",
            "-o",
            "x.gbd1",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 2);

    let o = bin()
        .args(["config", "dump"])
        .env("GRASPBENCH_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
}

#[test]
fn config_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        code(&run(&["bench", "--config", "missing.toml"], dir.path())),
        1
    );
    fs::write(dir.path().join("bad.toml"), "[protocol]\ntrails = 2\n").unwrap();
    let o = run(&["bench", "--config", "bad.toml", "--dry-run"], dir.path());
    assert_eq!(code(&o), 1);
    assert!(text(&o.stderr).contains("trails"));
    fs::write(dir.path().join("bad.toml"), "[matrix]\nnoise = [\"fog\"]\n").unwrap();
    assert_eq!(
        code(&run(
            &["bench", "--config", "bad.toml", "--dry-run"],
            dir.path()
        )),
        1
    );
    assert_eq!(code(&run(&["plan", "nothing.gbd1"], dir.path())), 1);
}

#[test]
fn scene_files_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let args = |out: &'static str| {
        vec![
            "scene",
            "--object",
            "ball",
            "--pose",
            "1",
            "--profile",
            "realsense@340lux",
            "--seed",
            "7",
            "-o",
            out,
        ]
    };
    assert_eq!(code(&run(&args("a.gbd1"), dir.path())), 0);
    assert_eq!(code(&run(&args("b.gbd1"), dir.path())), 0);
    let a = fs::read(dir.path().join("a.gbd1")).unwrap();
    assert_eq!(&a[..4], b"GBD1");
    assert_eq!(a, fs::read(dir.path().join("b.gbd1")).unwrap());
    assert_eq!(a.len(), 20 + 4 * 640 * 480);

    let mut other = args("c.gbd1");
    other[8] = "8";
    other.extend(["--ply", "c.ply"]);
    assert_eq!(code(&run(&other, dir.path())), 0);
    assert_ne!(a, fs::read(dir.path().join("c.gbd1")).unwrap());
    let ply = fs::read_to_string(dir.path().join("c.ply")).unwrap();
    assert!(ply.starts_with("ply\nformat ascii 1.0\n"));
}

#[test]
fn plan_cube_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("cube.toml"), CUBE).unwrap();
    let o = run(
        &[
            "scene",
            "--object",
            "cube",
            "--pose",
            "2",
            "-o",
            "cube.gbd1",
            "--config",
            "cube.toml",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", text(&o.stderr));

    for algo in ["topsurface", "mask"] {
        let o = run(
            &["plan", "cube.gbd1", "--algo", algo, "--config", "cube.toml"],
            dir.path(),
        );
        assert_eq!(code(&o), 0, "{}", text(&o.stderr));
        let v: serde_json::Value = serde_json::from_str(text(&o.stdout).trim()).unwrap();
        assert_eq!(v["type"], "grasp");
        let w = v["width_m"].as_f64().unwrap();
        if algo == "topsurface" {
            assert!((w - 0.06).abs() < 0.004, "width {w}");
        }
        assert!((0.05..=0.08).contains(&w), "{algo} width {w}");
    }

    write_gbd1(
        &dir.path().join("empty.gbd1"),
        &DepthImage::filled(640, 480, 0.8),
        0.8,
    )
    .unwrap();
    for algo in ["topsurface", "mask"] {
        let o = run(&["plan", "empty.gbd1", "--algo", algo], dir.path());
        assert_eq!(code(&o), 3, "{algo}: {}", text(&o.stdout));
        let v: serde_json::Value = serde_json::from_str(text(&o.stdout).trim()).unwrap();
        assert_eq!(v["type"], "error");
    }
    assert_eq!(
        code(&run(
            &["plan", "cube.gbd1", "--algo", "psychic"],
            dir.path()
        )),
        2
    );
}

#[test]
fn external_planner_is_relayed() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("cube.toml"), CUBE).unwrap();
    run(
        &[
            "scene",
            "--object",
            "cube",
            "--pose",
            "1",
            "-o",
            "cube.gbd1",
            "--config",
            "cube.toml",
        ],
        dir.path(),
    );
    let reply = r#"{"type":"grasp","x_m":0.0,"y_m":0.25,"z_m":0.02,"angle_rad":0.5,"width_m":0.06,"quality":0.75}"#;
    let script = dir.path().join("dummy_planner");
    fs::write(&script, format!("#!/bin/sh\nread line\necho '{reply}'\n")).unwrap();
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        fs::set_permissions(&script, fs::Permissions::from_mode(0o755)).unwrap();
    }
    let o = run(
        &["plan", "cube.gbd1", "--algo", "external:./dummy_planner"],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", text(&o.stderr));
    let got: serde_json::Value = serde_json::from_str(text(&o.stdout).trim()).unwrap();
    let want: serde_json::Value = serde_json::from_str(reply).unwrap();
    assert_eq!(got, want);

    let o = run(
        &[
            "plan",
            "cube.gbd1",
            "--algo",
            r#"external:read l; echo '{"type":"error","message":"nope"}'"#,
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 3);
    let o = run(
        &[
            "plan",
            "cube.gbd1",
            "--algo",
            "external:read l; echo garbage",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 1);
}

#[test]
fn bench_dry_run_and_reruns() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["bench", "--dry-run"], dir.path());
    assert_eq!(code(&o), 0);
    let out = text(&o.stdout);
    assert!(out.contains("topsurface/clean/franka-like") && out.contains("mask/clean/franka-like"));
    assert!(out.contains("360 records"), "{out}");
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);

    let cfg = r#"
[protocol]
trials = 1
master_seed = 11

[matrix]
planners = ["topsurface"]
noise = ["realsense@60lux"]
objects = ["ball", "strawberry"]

[output]
dir = "run"
"#;
    fs::write(dir.path().join("small.toml"), cfg).unwrap();
    let o = run(&["bench", "--config", "small.toml"], dir.path());
    assert_eq!(code(&o), 0, "{}", text(&o.stderr));
    assert!(text(&o.stdout).contains("topsurface/realsense@60lux/franka-like"));
    let name = "report_topsurface_realsense@60lux_franka-like.json";
    let first = fs::read(dir.path().join("run").join(name)).unwrap();
    let v: serde_json::Value = serde_json::from_slice(&first).unwrap();
    assert_eq!(v["records"].as_array().unwrap().len(), 12);
    for k in ["gs", "gss", "per_object"] {
        assert!(v["summary"].get(k).is_some());
    }
    let csv = fs::read_to_string(dir.path().join("run/summary.csv")).unwrap();
    assert!(csv.starts_with("config_id,object,gss,gs,records,failures\n"));
    assert_eq!(csv.lines().count(), 3);

    let o = run(
        &["bench", "--config", "small.toml", "--out", "again"],
        dir.path(),
    );
    assert_eq!(code(&o), 0);
    assert_eq!(
        first,
        fs::read(dir.path().join("again").join(name)).unwrap()
    );

    run(
        &[
            "bench",
            "--config",
            "small.toml",
            "--out",
            "reseeded",
            "--seed",
            "12",
        ],
        dir.path(),
    );
    assert_ne!(
        first,
        fs::read(dir.path().join("reseeded").join(name)).unwrap()
    );
}

#[test]
fn config_dump_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["config", "dump"], dir.path());
    assert_eq!(code(&o), 0);
    let dump = text(&o.stdout);
    for s in [
        "[protocol]",
        "[matrix]",
        "[camera]",
        "[planner.topsurface]",
        "[planner.mask]",
        "[stability]",
        "[output]",
    ] {
        assert!(dump.contains(s), "{s}");
    }
    fs::write(dir.path().join("dump.toml"), &dump).unwrap();
    let again = run(&["config", "dump", "--config", "dump.toml"], dir.path());
    assert_eq!(text(&again.stdout), dump);
}
