use std::path::Path;
use std::process::{Command, Output};

fn xthm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_xthm")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

const SMALL: &str = r#"
fields = ["T"]
plane = "plane_strain"
t_ref = 0

[study]
kind = "stationary"

[mesh]
kind = "structured"
nx = 4
ny = 2
width = "1 m"
height = "0.5 m"

[[materials]]
id = 0
E = "1 GPa"
nu = 0.3
lambda_s = "2 W/(m.degC)"

[[bc.dirichlet]]
tag = "left"
field = "T"
value = 10
[[bc.dirichlet]]
tag = "right"
field = "T"
value = 30
"#;

const CRACKED: &str = r#"
fields = ["u"]
plane = "plane_strain"
t_ref = 0

[study]
kind = "stationary"

[mesh]
kind = "structured"
nx = 21
ny = 21
width = "1 m"
height = "1 m"

[[materials]]
id = 0
E = "1 GPa"
nu = 0.3

[[cracks]]
vertices = [[0, "0.5 m"], ["0.3 m", "0.5 m"]]
tips = [false, true]

[[bc.dirichlet]]
tag = "bottom"
field = "uy"
value = 0
[[bc.dirichlet]]
tag = "bottom"
field = "ux"
value = 0

[[bc.neumann]]
tag = "top"
kind = "traction_y"
value = "1 MPa"
"#;

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn validate_config_accepts_and_dumps() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write(d.path(), "small.toml", SMALL);
    let o = xthm(&["validate-config", &cfg]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "ok");
    let o = xthm(&["validate-config", &cfg, "--dump"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("nx = 4"));
}

#[test]
fn configuration_errors_exit_with_two() {
    let d = tempfile::tempdir().unwrap();
    let bad = write(d.path(), "bad.toml", &SMALL.replace("value = 30", "value = 30\nbogus = 1"));
    assert_eq!(xthm(&["validate-config", &bad]).status.code(), Some(2));
    let missing = d.path().join("missing.toml");
    assert_eq!(xthm(&["validate-config", missing.to_str().unwrap()]).status.code(), Some(2));
    let tag = write(d.path(), "tag.toml", &SMALL.replace("tag = \"left\"", "tag = \"nowhere\""));
    assert_eq!(xthm(&["validate-config", &tag]).status.code(), Some(2));
}

#[test]
fn runtime_failure_exits_with_one() {
    // the SIF integration disk does not fit in the mesh
    let d = tempfile::tempdir().unwrap();
    let cfg = write(d.path(), "wide.toml", &format!("{CRACKED}\n[sif]\nr1 = \"1 m\"\nr2 = \"2 m\"\n"));
    let o = xthm(&["sif", &cfg]);
    assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn run_writes_outputs() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write(d.path(), "small.toml", SMALL);
    let out = d.path().join("out");
    let o = xthm(&["run", &cfg, "-o", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    for f in ["probes.csv", "convergence.jsonl", "state_0000.vtk"] {
        assert!(out.join(f).exists(), "{f}");
    }
}

#[test]
fn probe_prints_linear_temperature() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write(d.path(), "small.toml", SMALL);
    let o = xthm(&["probe", &cfg, "--at", "0.25,0.25", "--at", "0.5,0.1", "--fields", "T"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(header[0], "t");
    assert_eq!(header.len(), 3);
    let row: Vec<f64> = lines.next().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert!((row[1] - 15.0).abs() < 1e-10);
    assert!((row[2] - 20.0).abs() < 1e-10);
}

#[test]
fn sif_prints_one_row_per_tip() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write(d.path(), "cracked.toml", CRACKED);
    let o = xthm(&["sif", &cfg]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t,crack,tip,K_I,K_II,J,F_I,theta_c");
    assert_eq!(lines.len(), 2);
    let k_i: f64 = lines[1].split(',').nth(3).unwrap().parse().unwrap();
    assert!(k_i > 0.0);
}

#[test]
fn mesh_gen_writes_native_mesh() {
    let d = tempfile::tempdir().unwrap();
    let out = d.path().join("grid.mesh");
    let o = xthm(&["mesh-gen", "--nx", "3", "--ny", "2", "--width", "1", "--height", "1", "-o", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let mesh = xthm::mesh::Mesh::from_text(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(mesh.nodes.len(), 12);
    assert_eq!(mesh.elements.len(), 6);
    assert_eq!(xthm(&["mesh-gen", "--nx", "3", "-o", out.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn benchmark_without_name_lists_benchmarks() {
    let o = xthm(&["benchmark"]);
    assert_eq!(o.status.code(), Some(0));
    let names: Vec<String> = stdout(&o).lines().map(str::to_string).collect();
    assert_eq!(names, xthm::benchmarks::NAMES);
    assert_eq!(xthm(&["benchmark", "no_such_benchmark"]).status.code(), Some(2));
}

#[test]
fn failing_benchmark_exits_with_three() {
    // the penalty contact benchmark misses its complementarity target
    let d = tempfile::tempdir().unwrap();
    let o = xthm(&["benchmark", "clamped_beam_contact", "-o", d.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stdout(&o).contains("FAIL"));
    assert!(d.path().join("clamped_beam_contact").join("contact_points.csv").exists());
}
