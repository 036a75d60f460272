use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use expander_lab::cli::{SolveReport, SweepReport};
use serde_json::Value;

fn run(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_expander-lab"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn foliation_table_from_grid() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["foliate", "--s-grid", "-1:0.01:1", "--out", "f"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let table = fs::read_to_string(dir.path().join("f/foliation.csv")).unwrap();
    assert_eq!(table.lines().count(), 1 + 201);
    let rep = json(&dir.path().join("f/report.json"));
    assert_eq!(rep["leaves"], 201);
    assert_eq!(rep["ordered"], true);
    assert!(rep["max_ode_residual"].as_f64().unwrap() < 1e-8);
}

#[test]
fn nonpositive_leaf_label_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    for s in ["0", "-0.05"] {
        let out = run(&["solve", "--s", s, "--out", "z"], dir.path());
        assert_eq!(out.status.code(), Some(3));
        assert!(String::from_utf8_lossy(&out.stderr).contains("admissible"));
    }
    assert!(!dir.path().join("z").exists());
}

#[test]
fn usage_errors_exit_64() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["frobnicate"], dir.path()).status.code(), Some(64));
    assert_eq!(run(&["solve", "--set", "colour=red"], dir.path()).status.code(), Some(64));
    assert_eq!(run(&["solve", "--k", "three"], dir.path()).status.code(), Some(64));
    assert_eq!(run(&[], dir.path()).status.code(), Some(64));
    assert_eq!(run(&["--help"], dir.path()).status.code(), Some(0));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.txt"), "seed = disk\nR = 1.5\ndisk_rings = 8\nout = d\n").unwrap();
    let out = run(&["solve", "--config", "c.txt", "--R", "1"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rep = json(&dir.path().join("d/report.json"));
    assert_eq!(rep["config"]["R"], 1.0);
    assert_eq!(rep["config"]["disk_rings"], 8);
}

#[test]
fn flat_disk_report_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["solve", "--seed", "disk", "--out", "d"];
    assert_eq!(run(&args, dir.path()).status.code(), Some(0));
    for name in ["mesh.obj", "report.json", "history.csv", "series.csv"] {
        assert!(dir.path().join("d").join(name).exists(), "{name}");
    }
    let first = fs::read(dir.path().join("d/report.json")).unwrap();
    assert_eq!(run(&args, dir.path()).status.code(), Some(0));
    assert_eq!(fs::read(dir.path().join("d/report.json")).unwrap(), first);

    let rep = json(&dir.path().join("d/report.json"));
    let d = &rep["diagnostics"];
    assert_eq!(rep["schema_version"], 1);
    assert_eq!(d["genus"], 0);
    assert_eq!(d["type"], "Other");
    assert_eq!(d["size"], "Small");
    assert!((d["phi_integral"].as_f64().unwrap() - 1.0).abs() < 1e-3);

    // Parse and re-emit without loss.
    let text = String::from_utf8(first).unwrap();
    let parsed: SolveReport = serde_json::from_str(&text).unwrap();
    assert_eq!(expander_lab::cli::emit_report(&parsed).unwrap(), text);
}

#[test]
fn three_circle_solve_reports_genus_and_curvature() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        &["solve", "--k", "3", "--R", "2", "--s", "0.05", "--seed", "annulus_reflect", "--genus-target", "2", "--out", "s"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rep: SolveReport = serde_json::from_str(&fs::read_to_string(dir.path().join("s/report.json")).unwrap()).unwrap();
    assert_eq!(rep.diagnostics.genus, 2);
    assert_eq!(rep.genus_target_ok, Some(true));
    let c = rep.curvature.unwrap();
    assert!((c.target - 12.0 * std::f64::consts::PI).abs() < 1e-12);
    assert_eq!(c.half_total_curvature, rep.diagnostics.total_curvature);
    assert!(rep.diagnostics.eta_tracking.is_some());
    let mesh = expander_lab::mesh::load_mesh(&dir.path().join("s/mesh.obj")).unwrap();
    assert_eq!(expander_lab::mesh::euler_and_genus(&mesh).unwrap().genus, 2);

    // The saved mesh verifies on its own.
    let out = run(&["verify", "--mesh", "s/mesh.obj", "--out", "v"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&dir.path().join("v/report.json"));
    assert_eq!(v["diagnostics"]["type"], "Type1");
    assert!(v["expander_residual"].as_f64().unwrap() < 1e-3);
}

#[test]
fn wrong_genus_target_exits_3_after_writing() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["solve", "--seed", "disk", "--genus-target", "1", "--out", "d"], dir.path());
    assert_eq!(out.status.code(), Some(3));
    assert!(dir.path().join("d/report.json").exists());
}

#[test]
fn iteration_cap_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["solve", "--max-iter", "2", "--refine-levels", "0", "--out", "n"], dir.path());
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("n/history.csv").exists());
}

#[test]
fn model_and_csf_runs() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["model", "--resolution", "64", "--out", "m"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let m = json(&dir.path().join("m/report.json"));
    assert_eq!(m["model"]["degrees"]["d_minus"], 1);
    assert!(fs::read_to_string(dir.path().join("m/chart.csv")).unwrap().starts_with("x,z,u,u_conj\n"));

    let out = run(&["csf", "--csf-steps", "5", "--out", "c"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let c = json(&dir.path().join("c/report.json"));
    assert_eq!(c["max_abs_z_monotone"], true);
    for d in c["final_circle_distance"].as_array().unwrap() {
        assert!(d.as_f64().unwrap() < 1e-3);
    }
}

#[test]
fn sweep_spawns_one_worker_per_label() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_expander-lab"))
        .args(["sweep", "--s-list", "0.1,0.05", "--refine-levels", "0", "--cone-samples", "0", "--out", "w"])
        .env(expander_lab::cli::WORKER_EXE_VAR, env!("CARGO_BIN_EXE_expander-lab"))
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rep: SweepReport = serde_json::from_str(&fs::read_to_string(dir.path().join("w/report.json")).unwrap()).unwrap();
    assert_eq!(rep.runs.len(), 2);
    for r in &rep.runs {
        assert_eq!(r.exit_code, 0);
        assert_eq!(r.genus, Some(2));
    }
    assert!(dir.path().join("w/s01/report.json").exists());
}
