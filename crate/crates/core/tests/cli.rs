use std::path::Path;
use std::process::Command;

use nalgebra::Vector3;
use rod_contact::io::{read_metrics, read_trajectory, TrajectoryWriter};
use rod_contact::RodState;

fn rodsim(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_rodsim")).args(args).output().unwrap()
}

fn small_config(dir: &Path, extra: &str) -> std::path::PathBuf {
    let path = dir.join("cfg.toml");
    let text = format!("[scenario]\nnodes_per_rod = 16\n\n[output]\nduration = 0.02\nstride = 5\n{extra}");
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn run_writes_outputs_and_flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), "");
    let out = dir.path().join("run");
    let o = rodsim(&["run", cfg.to_str().unwrap(), "--out-dir", out.to_str().unwrap(), "--duration", "0.01", "--mu", "0.2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let m = read_metrics(&out.join("metrics.json")).unwrap();
    assert_eq!(m.steps, 10);
    let traj = read_trajectory(&out.join("trajectory.csv")).unwrap();
    assert_eq!(traj.snapshots.len(), 3);
    let resolved = std::fs::read_to_string(out.join("config.toml")).unwrap();
    assert!(resolved.contains("mu = 0.2"));
}

#[test]
fn bad_config_exits_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), "bogus = 1\n");
    assert_eq!(rodsim(&["run", cfg.to_str().unwrap()]).status.code(), Some(2));
    let cfg = small_config(dir.path(), "");
    assert_eq!(rodsim(&["run", cfg.to_str().unwrap(), "--duration", "-1"]).status.code(), Some(2));
}

#[test]
fn missing_inputs_exit_with_4() {
    let dir = tempfile::tempdir().unwrap();
    let nope = dir.path().join("nope.csv");
    let out = dir.path().join("e.csv");
    let o = rodsim(&["diff", nope.to_str().unwrap(), nope.to_str().unwrap(), "-o", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
    std::fs::write(dir.path().join("config.toml"), "").unwrap();
    let o = rodsim(&["propulsion", dir.path().to_str().unwrap(), "-o", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
}

fn write_line_trajectory(path: &Path, shift: Vector3<f64>) {
    let rods: Vec<RodState> = (0..2)
        .map(|r| {
            let nodes = (0..5).map(|i| Vector3::new(0.01 * i as f64, 0.05 * r as f64, 0.0) + shift).collect();
            RodState::new(nodes, vec![0.0; 4], None).unwrap()
        })
        .collect();
    let mut w = TrajectoryWriter::create(path).unwrap();
    w.write(0.0, &rods).unwrap();
    w.write(0.01, &rods).unwrap();
}

#[test]
fn diff_of_uniform_offset_is_offset_over_radius() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, out) = (dir.path().join("a.csv"), dir.path().join("b.csv"), dir.path().join("e.csv"));
    write_line_trajectory(&a, Vector3::zeros());
    write_line_trajectory(&b, Vector3::new(0.0, 3e-4, 4e-4));
    let o = rodsim(&["diff", a.to_str().unwrap(), b.to_str().unwrap(), "-o", out.to_str().unwrap()]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("time,e_bar"));
    for line in lines {
        let e: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert!((e - 0.5).abs() < 1e-12, "{e}");
    }
}

#[test]
fn propulsion_of_undriven_rod_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.toml");
    std::fs::write(
        &cfg,
        "[scenario]\nnodes_per_rod = 16\nnum_flagella = 1\nomega = 0.0\n\n[output]\nduration = 0.01\nstride = 5\n",
    )
    .unwrap();
    let run_dir = dir.path().join("run");
    assert!(rodsim(&["run", cfg.to_str().unwrap(), "--out-dir", run_dir.to_str().unwrap()]).status.success());
    let out = dir.path().join("fp.csv");
    let o = rodsim(&["propulsion", run_dir.to_str().unwrap(), "-o", out.to_str().unwrap()]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    let rows: Vec<f64> = text.lines().skip(1).map(|l| l.split(',').nth(2).unwrap().parse().unwrap()).collect();
    assert_eq!(rows.len(), 10);
    assert!(rows.iter().all(|f| f.abs() < 1e-9), "{rows:?}");
}
