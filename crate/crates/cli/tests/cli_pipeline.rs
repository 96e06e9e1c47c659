//! End-to-end checks of the command-line driver through the real binary.

use std::path::Path;
use std::process::{Command, Output};

fn mmflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mmflow"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) {
    let out = mmflow(args);
    assert!(
        out.status.success(),
        "command {:?} failed: {}",
        args,
        String::from_utf8_lossy(&out.stderr)
    );
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

#[test]
fn synth_is_seed_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for d in [&a, &b] {
        ok(&["synth", "--seed", "5", "--out", d.to_str().unwrap(), "--set", "n_samples=64"]);
    }
    for name in ["gauss2d.txt", "so3.txt", "cat.txt", "torus.txt", "con.txt", "atoms.txt", "two_cluster.txt"]
    {
        assert_eq!(read(&a.join(name)), read(&b.join(name)), "{name} differs");
    }
}

#[test]
fn zero_iteration_checkpoint_equals_initialization() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let run = dir.path().join("run");
    ok(&["synth", "--seed", "9", "--out", data.to_str().unwrap(), "--set", "n_samples=32"]);
    ok(&[
        "train",
        "--seed",
        "9",
        "--flow",
        "pos",
        "--out",
        run.to_str().unwrap(),
        "--set",
        &format!("data={}", data.join("gauss2d.txt").display()),
        "--set",
        "iters=0",
        "--set",
        "hidden=8,8",
    ]);
    let mut rng = mmflow::rng::substream(9, "init");
    let set = mmflow::nn::loss::ModelSet::new(&[8, 8], 21, &mut rng);
    let expect = mmflow::nn::checkpoint::encode_checkpoint(&set.to_tensors());
    let got = std::fs::read(run.join("model.ckpt")).unwrap();
    assert_eq!(got, expect);

    let log = read(&run.join("loss.csv"));
    assert_eq!(log.lines().count(), 1, "zero iterations leave only the header");
}

#[test]
fn loss_log_row_count_matches_iterations_over_log_every() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let run = dir.path().join("run");
    ok(&["synth", "--seed", "3", "--out", data.to_str().unwrap(), "--set", "n_samples=32"]);
    ok(&[
        "train",
        "--seed",
        "3",
        "--flow",
        "con",
        "--out",
        run.to_str().unwrap(),
        "--set",
        &format!("data={}", data.join("con.txt").display()),
        "--set",
        "iters=10",
        "--set",
        "log_every=3",
        "--set",
        "batch=4",
        "--set",
        "hidden=8",
    ]);
    let log = read(&run.join("loss.csv"));
    let rows: Vec<&str> = log.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows.len(), 10 / 3);
    for row in &rows {
        assert_eq!(row.split(',').count(), 8);
    }
}

#[test]
fn trajectory_writes_n_plus_one_frames() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let run = dir.path().join("run");
    let samp = dir.path().join("samp");
    ok(&["synth", "--seed", "4", "--out", data.to_str().unwrap(), "--set", "n_samples=32"]);
    ok(&[
        "train",
        "--seed",
        "4",
        "--flow",
        "pos",
        "--out",
        run.to_str().unwrap(),
        "--set",
        &format!("data={}", data.join("gauss2d.txt").display()),
        "--set",
        "iters=0",
        "--set",
        "hidden=8",
    ]);
    ok(&[
        "sample",
        "--seed",
        "4",
        "--flow",
        "pos",
        "--out",
        samp.to_str().unwrap(),
        "--set",
        &format!("checkpoint={}", run.join("model.ckpt").display()),
        "--steps",
        "5",
        "--set",
        "n_samples=7",
        "--set",
        "hidden=8",
        "--trajectory",
    ]);
    for k in 0..=5 {
        let frame = read(&samp.join(format!("traj_{k:04}.txt")));
        let rows = frame.lines().filter(|l| !l.starts_with('#')).count();
        assert_eq!(rows, 7, "frame {k}");
    }
    assert!(!samp.join("traj_0006.txt").exists());
}

#[test]
fn exact_field_sampling_reaches_the_target_endpoint() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let run = dir.path().join("run");
    let samp = dir.path().join("samp");
    ok(&["synth", "--seed", "8", "--out", data.to_str().unwrap(), "--set", "n_samples=16"]);
    ok(&[
        "train",
        "--seed",
        "8",
        "--flow",
        "pos",
        "--out",
        run.to_str().unwrap(),
        "--set",
        &format!("data={}", data.join("gauss2d.txt").display()),
        "--set",
        "iters=0",
        "--set",
        "hidden=8",
    ]);
    ok(&[
        "sample",
        "--seed",
        "8",
        "--flow",
        "pos",
        "--out",
        samp.to_str().unwrap(),
        "--set",
        &format!("checkpoint={}", run.join("model.ckpt").display()),
        "--steps",
        "200",
        "--set",
        "n_samples=10",
        "--set",
        "hidden=8",
        "--set",
        "exact_target=1.25,-0.5,2",
    ]);
    for line in read(&samp.join("samples.txt")).lines().filter(|l| !l.starts_with('#')) {
        let xyz: Vec<f64> =
            line.split_whitespace().map(|f| f.parse().unwrap()).collect();
        let d = ((xyz[0] - 1.25).powi(2) + (xyz[1] + 0.5).powi(2) + (xyz[2] - 2.0).powi(2))
            .sqrt();
        assert!(d <= 1e-6, "endpoint miss {d}");
    }
}

#[test]
fn eval_of_identical_inputs_yields_the_identity_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let surf = dir.path().join("surf");
    let ev = dir.path().join("ev");
    ok(&["synth", "--seed", "2", "--out", data.to_str().unwrap(), "--set", "n_residues=5"]);
    ok(&[
        "surface",
        "--seed",
        "2",
        "--out",
        surf.to_str().unwrap(),
        "--set",
        &format!("data={}", data.join("atoms.txt").display()),
        "--set",
        "surface_points=64",
    ]);
    let sf = surf.join("surface.txt");
    ok(&[
        "eval",
        "--out",
        ev.to_str().unwrap(),
        "--set",
        &format!("samples={}", sf.display()),
        "--set",
        &format!("reference={}", sf.display()),
    ]);
    let report: serde_json::Value =
        serde_json::from_str(&read(&ev.join("report.json"))).unwrap();
    let keys: Vec<&String> = report.as_object().unwrap().keys().collect();
    assert_eq!(keys, ["aar", "chamfer", "iou", "nc", "rmsd"]);
    assert_eq!(report["chamfer"].as_f64().unwrap(), 0.0);
    assert!((report["nc"].as_f64().unwrap() - 1.0).abs() <= 1e-9);
    assert_eq!(report["iou"].as_f64().unwrap(), 1.0);
    assert!(report["rmsd"].as_f64().unwrap().abs() <= 1e-9);
    assert_eq!(report["aar"].as_f64().unwrap(), 100.0);
    let dat = read(&ev.join("metrics.dat"));
    assert!(dat.starts_with("# idx chamfer nc iou rmsd aar\n"));
    assert_eq!(dat.lines().count(), 2);
}

#[test]
fn eval_missing_file_reports_the_path_with_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let gone = dir.path().join("gone.txt");
    let out = mmflow(&[
        "eval",
        "--out",
        dir.path().join("ev").to_str().unwrap(),
        "--set",
        &format!("samples={}", gone.display()),
        "--set",
        &format!("reference={}", gone.display()),
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("gone.txt"));
}

#[test]
fn unknown_config_key_is_a_config_error() {
    let out = mmflow(&["synth", "--set", "not_a_key=1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not_a_key"));
}

#[test]
fn rerun_from_echoed_config_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    ok(&["synth", "--seed", "6", "--out", data.to_str().unwrap(), "--set", "n_samples=48"]);
    let first = read(&data.join("gauss2d.txt"));
    let echo = data.join("config.echo");
    let echo_before = read(&echo);
    ok(&["synth", "--config", echo.to_str().unwrap()]);
    assert_eq!(read(&data.join("gauss2d.txt")), first);
    assert_eq!(read(&echo), echo_before);
}
