use std::path::Path;
use std::process::{Command, Output};

use penalflow::io::vtk::parse_vtk;
use penalflow::io::{RunManifest, CSV_HEADER};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_penalflow")).args(args).output().unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("run.cfg");
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

fn assert_single_error_line(out: &Output, code: i32, kind: &str) {
    assert_eq!(out.status.code(), Some(code), "{}", stderr(out));
    let err = stderr(out);
    let lines: Vec<&str> = err.lines().filter(|l| l.starts_with("penalflow: error[")).collect();
    assert_eq!(lines.len(), 1, "{err}");
    assert!(lines[0].starts_with(&format!("penalflow: error[{kind}]: ")), "{err}");
}

#[test]
fn mesh_command_writes_a_readable_mesh() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("mesh.txt");
    let res = run(&["mesh", "--case", "box_wall", "--h", "0.2", "--out", out.to_str().unwrap()]);
    assert!(res.status.success(), "{}", stderr(&res));
    let mesh = penalflow::mesh::io::read_mesh(&out).unwrap();
    mesh.check_invariants().unwrap();
    let stdout = String::from_utf8(res.stdout).unwrap();
    assert!(stdout.contains(&penalflow::mesh::io::mesh_fingerprint(&mesh)));
}

#[test]
fn configuration_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "case = box_wall\n[penalty]\nn = -1\n");
    let res = run(&["sweep", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_single_error_line(&res, 2, "config");
    assert!(stderr(&res).contains("line 3"), "{}", stderr(&res));

    let cfg = write_config(dir.path(), "h = 0.1\n");
    assert_single_error_line(&run(&["sweep", "--config", &cfg]), 2, "config");

    assert_single_error_line(&run(&["mesh", "--case", "moon", "--out", "x"]), 2, "config");
    assert_single_error_line(&run(&["frobnicate"]), 2, "config");
}

#[test]
fn io_errors_exit_4() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.cfg");
    assert_single_error_line(&run(&["sweep", "--config", missing.to_str().unwrap()]), 4, "io");

    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "scheme,m\nvolume,1\n").unwrap();
    assert_single_error_line(&run(&["rates", "--in", bad.to_str().unwrap()]), 4, "io");
}

#[test]
fn rates_reports_bounds_for_a_linear_table() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.csv");
    let mut text = format!("{}\n", CSV_HEADER.join(","));
    for k in 4..=10 {
        let p = 10f64.powi(k);
        let e = 3.0 / p;
        text += &format!("viscosity,{p:e},0e0,{e:e},{e:e},{e:e},{e:e},{e:e},{e:e},5,true\n");
    }
    std::fs::write(&path, text).unwrap();
    let res = run(&["rates", "--in", path.to_str().unwrap(), "--window", "1e6:1e10"]);
    assert!(res.status.success(), "{}", stderr(&res));
    let stdout = String::from_utf8(res.stdout).unwrap();
    let bounds: Vec<&str> = stdout.lines().filter(|l| l.starts_with("bound viscosity")).collect();
    assert_eq!(bounds.len(), 3, "{stdout}");
    assert!(bounds.iter().all(|l| l.contains(" pass ")), "{stdout}");
    assert!(stdout.contains("slope -1.0000"), "{stdout}");
}

#[test]
fn solve_writes_vtk_with_frozen_obstacle() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "case = box_wall\nh = 0.25\ncircle_segments = 24\n");
    let out = dir.path().join("fields.vtk");
    let res = run(&["solve", "--config", &cfg, "--scheme", "viscosity", "--m", "1e5", "--out", out.to_str().unwrap()]);
    assert!(res.status.success(), "{}", stderr(&res));
    let vtk = parse_vtk(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert!(vtk.title.starts_with("penalflow run "));
    assert!(vtk.cell_types.iter().all(|&t| t == 22));
    let solid_speed = vtk
        .cells
        .iter()
        .zip(&vtk.region)
        .filter(|(_, &r)| r != 0)
        .flat_map(|(c, _)| c.iter())
        .map(|&i| vtk.velocity[i][0].hypot(vtk.velocity[i][1]))
        .fold(0.0f64, f64::max);
    assert!(solid_speed < 1.0, "max speed in obstacle {solid_speed}");
}

#[test]
fn sweep_writes_csv_and_verifiable_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "case = no_obstacle\nh = 0.3\nschemes = volume\n[penalty]\nn = 1e2:1e4\n",
    );
    let out = dir.path().join("results");
    let res = run(&["sweep", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(res.status.success(), "{}", stderr(&res));
    let csv = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    assert_eq!(csv.lines().next().unwrap(), CSV_HEADER.join(","));
    let manifest = RunManifest::read(&out).unwrap();
    manifest.verify(&out).unwrap();
    assert!(String::from_utf8(res.stdout).unwrap().contains(&manifest.run_id));
}

#[test]
fn mms_linear_solution_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("mms.csv");
    let res = run(&["mms", "--levels", "2", "--base-h", "0.5", "--linear", "--out", out.to_str().unwrap()]);
    assert!(res.status.success(), "{}", stderr(&res));
    let text = std::fs::read_to_string(&out).unwrap();
    for line in text.lines().skip(1) {
        let cells: Vec<&str> = line.split(',').collect();
        assert!(cells[3].parse::<f64>().unwrap() < 1e-12 && cells[4].parse::<f64>().unwrap() < 1e-12, "{line}");
    }
}
