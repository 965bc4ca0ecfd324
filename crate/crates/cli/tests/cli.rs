use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_curve-unfold")).args(args).output().expect("binary runs")
}

fn path(p: &PathBuf) -> &str {
    p.to_str().unwrap()
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn stderr_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stderr).expect("stderr is JSON")
}

#[test]
fn unfold_tetra_writes_svg_and_layout() {
    let dir = tempfile::tempdir().unwrap();
    let (svg, json) = (dir.path().join("out.svg"), dir.path().join("out.json"));
    let out = run(&["unfold", "--mesh", path(&data("tetra.json")), "--curve", path(&data("slice.json")), "--svg", path(&svg), "--json", path(&json)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(stdout_json(&out)["passed"], true);
    let text = std::fs::read_to_string(&svg).unwrap();
    assert_eq!(text.matches(r#"class="piece"#).count(), 5);
    let layout: Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(layout["pieces"].as_array().unwrap().len(), 5);
    assert_eq!(layout["report"]["simple"], true);
    // no temporary files left behind
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 2);
}

#[test]
fn svg_bytes_are_stable() {
    let dir = tempfile::tempdir().unwrap();
    let mut texts = Vec::new();
    for name in ["a.svg", "b.svg"] {
        let svg = dir.path().join(name);
        let out = run(&["unfold", "--mesh", path(&data("tetra.json")), "--curve", path(&data("slice.json")), "--svg", path(&svg)]);
        assert!(out.status.success());
        texts.push(std::fs::read(&svg).unwrap());
    }
    assert_eq!(texts[0], texts[1]);
}

#[test]
fn classify_truncated_cube_is_quasigeodesic() {
    let out = run(&["classify", "--mesh", path(&data("tcube.off")), "--curve", path(&data("tcube_q.json"))]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout_json(&out)["quasigeodesic"], true);
}

#[test]
fn generator_condition_failure_exits_one() {
    let out = run(&["unfold", "--mesh", path(&data("cube.json")), "--curve", path(&data("hook.json"))]);
    assert_eq!(out.status.code(), Some(1));
    let diag = stderr_json(&out);
    assert_eq!(diag["stage"], "generator_condition");
    assert_eq!(diag["error"], "not_eligible");
}

#[test]
fn missing_file_exits_two() {
    let out = run(&["classify", "--mesh", "/nonexistent/mesh.off", "--curve", path(&data("slice.json"))]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"], "io");
}

#[test]
fn malformed_curve_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"points": [{"vertex": 0}], "closed": false}"#).unwrap();
    let out = run(&["classify", "--mesh", path(&data("tetra.json")), "--curve", path(&bad)]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"], "format");
}

#[test]
fn stored_layout_verifies() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("layout.json");
    let (mesh, curve) = (data("tetra.json"), data("slice.json"));
    let args = ["--mesh", path(&mesh), "--curve", path(&curve)];
    assert!(run(&[&["unfold"], &args[..], &["--json", path(&json)]].concat()).status.success());
    let out = run(&[&["verify"], &args[..], &["--layout", path(&json), "--samples", "30"]].concat());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = stdout_json(&out);
    assert_eq!(v["passed"], true);
    assert_eq!(v["layout"]["simple"], true);
}

#[test]
fn generated_face_curve_unfolds() {
    let dir = tempfile::tempdir().unwrap();
    let curve = dir.path().join("square.json");
    let out = run(&["gen-curve", "--mesh", path(&data("cube.json")), "--face", "1", "--size", "0.2", "--out", path(&curve)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let out = run(&["unfold", "--mesh", path(&data("cube.json")), "--curve", path(&curve), "--side", "1"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(stdout_json(&out)["pieces"], 1);
}
