use std::path::{Path, PathBuf};
use std::process::Command;

use saddle_tower::io::{parse_obj, TowerSidecar};
use serde_json::Value;

fn spec(name: &str) -> String {
    let p: PathBuf = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../specs").join(name);
    p.to_string_lossy().into_owned()
}

fn run(args: &[&str], out: &Path) -> (i32, Value) {
    let status = Command::new(env!("CARGO_BIN_EXE_saddle-tower"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs");
    let code = status.status.code().expect("exit code");
    let report = std::fs::read_to_string(out.join("report.json"))
        .map(|s| serde_json::from_str(&s).expect("report is JSON"))
        .unwrap_or(Value::Null);
    (code, report)
}

#[test]
fn special_hexagon_is_refused_with_its_chord() {
    let dir = tempfile::tempdir().unwrap();
    let (code, report) = run(&["validate", &spec("special_hexagon.json")], dir.path());
    assert_eq!(code, 10);
    assert_eq!(report["verdicts"]["is_special_bounded"], Value::Bool(true));
    let w = &report["verdicts"]["chord_criterion"]["witness"];
    assert_eq!((w["a"][0].as_f64(), w["a"][1].as_f64()), (Some(1.0), Some(0.0)));
    assert_eq!((w["b"][0].as_f64(), w["b"][1].as_f64()), (Some(1.0), Some(1.0)));
    assert!(report["refusal"]["criterion"].as_str().unwrap().contains("chord criterion"));
}

#[test]
fn odd_polygon_names_the_invariant() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("pentagon.json");
    std::fs::write(&path, r#"{"vertices": [[0,0],[1,0],[1.309017,0.951057],[0.5,1.538842],[-0.309017,0.951057]]}"#).unwrap();
    let (code, report) = run(&["validate", path.to_str().unwrap()], &dir.path().join("out"));
    assert_eq!(code, 3);
    assert!(report["refusal"]["message"].as_str().unwrap().contains("even vertex count required"));
}

#[test]
fn usage_and_io_errors() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _) = run(&["solve", &spec("unit_square.json"), "--h", "-1"], dir.path());
    assert_eq!(code, 2);
    let (code, _) = run(&["solve", &spec("unit_square.json"), "--m-schedule", "4,2"], dir.path());
    assert_eq!(code, 2);
    let (code, _) = run(&["validate", "/nonexistent/spec.json"], dir.path());
    assert_eq!(code, 1);
    let (code, report) = run(&["asympt", &spec("unit_square.json")], dir.path());
    assert_eq!(code, 2);
    assert_eq!(report["refusal"]["code"], 2);
}

#[test]
fn strip_is_out_of_scope() {
    let dir = tempfile::tempdir().unwrap();
    let (code, report) = run(&["validate", &spec("strip.json")], dir.path());
    assert_eq!(code, 14);
    assert_eq!(report["verdicts"]["class"], "Strip");
    let (code, report) = run(&["tower", &spec("strip.json")], dir.path());
    assert_eq!(code, 14);
    assert_eq!(report["refusal"]["code"], 14);
}

#[test]
fn square_solve_reports_the_oracle_error() {
    let dir = tempfile::tempdir().unwrap();
    let (code, report) = run(&["solve", &spec("unit_square.json"), "--h", "0.015625"], dir.path());
    assert_eq!(code, 0);
    let err = report["verdicts"]["oracle_sup_error"].as_f64().unwrap();
    assert!(err <= 5e-3, "sup error {err}");
    assert!(dir.path().join("solution.txt").exists());
}

#[test]
fn square_conjugate_is_a_graph() {
    let dir = tempfile::tempdir().unwrap();
    let (code, report) = run(&["conjugate", &spec("unit_square.json")], dir.path());
    assert_eq!(code, 0);
    assert_eq!(report["verdicts"]["krust"]["passes"], Value::Bool(true));
    let fluxes: Vec<f64> =
        report["verdicts"]["edge_fluxes"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    for (i, f) in fluxes.iter().enumerate() {
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        assert!((f - sign).abs() < 2e-2, "edge {i}: {f}");
    }
}

#[test]
fn right_angle_tower_exports_obj_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let (code, report) = run(&["tower", &spec("right_angle.json"), "--n-max", "4"], dir.path());
    assert_eq!(code, 0, "{report}");
    let sidecar: TowerSidecar =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("tower.json")).unwrap()).unwrap();
    assert_eq!(sidecar.period, [0.0, 0.0, 2.0]);
    assert_eq!(sidecar.symmetry_planes, vec![0, 1, 2]);
    assert_eq!(sidecar.ends, 16);
    let soup = parse_obj(&std::fs::read_to_string(dir.path().join("tower.obj")).unwrap()).unwrap();
    assert_eq!(soup.vertices.len(), sidecar.vertices);
    assert_eq!(soup.triangles.len(), sidecar.triangles);
    assert_eq!(report["verdicts"]["tower_symmetry_exact"], Value::Bool(true));
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["tower", &spec("unit_square.json"), "--h", "0.0625", "--copies", "3"];
    assert_eq!(run(&args, a.path()).0, 0);
    assert_eq!(run(&args, b.path()).0, 0);
    for f in ["tower.obj", "tower.ply", "tower.json"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    let strip = |p: &Path| {
        let mut v: Value = serde_json::from_str(&std::fs::read_to_string(p.join("report.json")).unwrap()).unwrap();
        v["config"]["out"] = Value::Null;
        v["artifacts"] = Value::Null;
        v
    };
    assert_eq!(strip(a.path()), strip(b.path()));
}
