use std::path::Path;
use std::process::{Command, Output};

use pattern_core::mesh::{shapes, write_obj, SurfacePoint, TriMesh};

fn pattern(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pattern")).args(args).output().unwrap()
}

fn save(mesh: &TriMesh, path: &Path) {
    std::fs::write(path, write_obj(mesh.vertices(), mesh.faces())).unwrap();
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn make_writes_pattern_files() {
    let dir = tempfile::tempdir().unwrap();
    let obj = dir.path().join("tube.obj");
    save(&shapes::tube(32, 8, 2.0, |_| 1.0), &obj);
    let out = dir.path().join("out");
    let o = pattern(&["make", obj.to_str().unwrap(), "--corners", "6", "--seed", "3", "-o", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for f in ["pattern.svg", "pattern.json", "layout.json", "report.json", "config.json"] {
        assert!(out.join(f).is_file(), "{f}");
    }
    let svg = std::fs::read_to_string(out.join("pattern.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains(r#"class="outline""#));
    let cfg: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("config.json")).unwrap()).unwrap();
    assert_eq!(cfg["max_corners"], 6);
    assert_eq!(cfg["seed"], 3);
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert!(report["pieces"].as_u64().unwrap() >= 1);
}

#[test]
fn same_inputs_same_svg() {
    let dir = tempfile::tempdir().unwrap();
    let obj = dir.path().join("skirt.obj");
    save(&shapes::cone_skirt(24, 8, 1.0, 0.4, 0.9), &obj);
    let svgs: Vec<String> = (0..2)
        .map(|i| {
            let out = dir.path().join(format!("o{i}"));
            let o = pattern(&["make", obj.to_str().unwrap(), "-o", out.to_str().unwrap()]);
            assert_eq!(code(&o), 0, "{}", stderr(&o));
            std::fs::read_to_string(out.join("pattern.svg")).unwrap()
        })
        .collect();
    assert_eq!(svgs[0], svgs[1]);
}

#[test]
fn config_file_and_sketch() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = shapes::tube(32, 8, 2.0, |_| 1.0);
    let obj = dir.path().join("tube.obj");
    save(&mesh, &obj);
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"max_stretch": 0.04, "scale": 10}"#).unwrap();
    // a stroke running down one side of the tube
    let stroke: Vec<SurfacePoint> = (0..mesh.num_vertices())
        .filter(|&v| mesh.vertices()[v].x > 0.99)
        .map(|v| SurfacePoint::at_vertex(&mesh, v))
        .collect();
    let sketch = dir.path().join("strokes.json");
    std::fs::write(&sketch, serde_json::to_string(&vec![stroke]).unwrap()).unwrap();
    let out = dir.path().join("out");
    let o = pattern(&[
        "make",
        obj.to_str().unwrap(),
        "--config",
        cfg.to_str().unwrap(),
        "--sketch",
        sketch.to_str().unwrap(),
        "-o",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let saved: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("config.json")).unwrap()).unwrap();
    assert_eq!(saved["max_stretch"], 0.04);
    let layout: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("layout.json")).unwrap()).unwrap();
    assert!(layout["paths"].as_array().unwrap().iter().any(|p| p["origin"] == "sketch"));
}

#[test]
fn symmetry_plane_flag() {
    let dir = tempfile::tempdir().unwrap();
    let obj = dir.path().join("torso.obj");
    save(&shapes::torso(24, 10, 2.0, 0.5), &obj);
    let out = dir.path().join("out");
    let o = pattern(&["make", obj.to_str().unwrap(), "--symmetry-plane", "0,0,0,1,0,0", "--grain", "0,1,0", "-o", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let layout: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("layout.json")).unwrap()).unwrap();
    assert!(!layout["symmetry"].is_null());
}

#[test]
fn validation_failures_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.obj");
    std::fs::write(&bad, "v 0 0 0\nv 1 0 0\nf 1 2 3\n").unwrap();
    let o = pattern(&["make", bad.to_str().unwrap(), "-o", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));

    let obj = dir.path().join("tube.obj");
    save(&shapes::tube(16, 4, 2.0, |_| 1.0), &obj);
    let o = pattern(&["make", obj.to_str().unwrap(), "--corners", "3"]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    let o = pattern(&["make", obj.to_str().unwrap(), "--grain", "1,2"]);
    assert_eq!(code(&o), 2);
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"colour": "red"}"#).unwrap();
    let o = pattern(&["make", obj.to_str().unwrap(), "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));

    let poses = dir.path().join("poses");
    std::fs::create_dir(&poses).unwrap();
    save(&shapes::tube(16, 5, 2.0, |_| 1.0), &poses.join("a.obj"));
    let o = pattern(&["make", obj.to_str().unwrap(), "--poses", poses.to_str().unwrap()]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));

    let o = pattern(&["make", obj.to_str().unwrap(), "--symmetry-plane", "0.3,0,0,1,0,0"]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
}

#[test]
fn unsatisfiable_goals_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let obj = dir.path().join("ball.obj");
    save(&shapes::octasphere(2, 1.0), &obj);
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"max_depth": 0}"#).unwrap();
    let o = pattern(&["make", obj.to_str().unwrap(), "--config", cfg.to_str().unwrap(), "--max-stretch", "0.0001"]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    assert!(stderr(&o).contains("unsatisfiable"));
}
