use std::path::Path;
use std::process::{Command, Output};

use twoway_core::geometry::obj::{read_obj, write_obj};
use twoway_core::testkit::fixtures::{grid_patch, icosphere, spike, Shape};
use twoway_core::Vec3;

fn twoway(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_twoway")).args(args).env_remove("TWOWAY_SEED").output().expect("run twoway")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_shape(path: &Path, s: &Shape) {
    write_obj(path, &s.positions, &s.triangles, &[]).unwrap();
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn obj_frames(dir: &Path) -> usize {
    std::fs::read_dir(dir).unwrap().filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "obj")).count()
}

#[test]
fn missing_mesh_exits_2_and_names_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("scene.json");
    std::fs::write(&cfg, r#"{"meshes":[{"path":"absent.obj"}],"frames":1}"#).unwrap();
    let o = twoway(&["simulate", s(&cfg)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("absent.obj"), "{}", stderr(&o));
}

#[test]
fn malformed_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("scene.json");
    std::fs::write(&cfg, "{\"meshes\": [").unwrap();
    assert_eq!(twoway(&["simulate", s(&cfg)]).status.code(), Some(2));
}

#[test]
fn free_fall_writes_one_obj_and_row_per_frame() {
    let dir = tempfile::tempdir().unwrap();
    write_shape(&dir.path().join("patch.obj"), &grid_patch(4, 4, 0.02, 0.02));
    let cfg = dir.path().join("scene.json");
    std::fs::write(&cfg, r#"{"meshes":[{"path":"patch.obj"}],"frames":10,"output_dir":"frames"}"#).unwrap();
    let o = twoway(&["simulate", s(&cfg)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = dir.path().join("frames");
    assert_eq!(obj_frames(&out), 10);
    let csv = std::fs::read_to_string(out.join("stats.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "frame,steps,searches,residual,ms");
    assert_eq!(lines.len(), 11);
    for (k, row) in lines[1..].iter().enumerate() {
        let cols: Vec<&str> = row.split(',').collect();
        assert_eq!(cols.len(), 5);
        assert_eq!(cols[0].parse::<usize>().unwrap(), k + 1);
    }
    let last = read_obj(out.join("frame_0010.obj")).unwrap();
    let first = read_obj(dir.path().join("patch.obj")).unwrap();
    assert!(last.positions[0].z < first.positions[0].z - 1e-3, "patch did not fall");
}

#[test]
fn certified_cloth_on_sphere_reports_zero_intersections() {
    let dir = tempfile::tempdir().unwrap();
    write_shape(&dir.path().join("sphere.obj"), &icosphere(2, 0.03));
    write_shape(&dir.path().join("cloth.obj"), &grid_patch(9, 9, 0.08, 0.08).translated(Vec3::new(0.0, 0.0, 0.034)));
    let cfg = dir.path().join("scene.json");
    std::fs::write(
        &cfg,
        r#"{"meshes":[{"path":"sphere.obj","static":true},{"path":"cloth.obj","velocity":[0,0,-0.5]}],
            "model":{"spring_stiffness":100.0},"frames":4,"output_dir":"out"}"#,
    )
    .unwrap();
    let o = twoway(&["simulate", s(&cfg), "--certify"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains(" 0 intersections"), "{}", stdout(&o));

    let c = twoway(&["certify", s(&dir.path().join("out"))]);
    assert_eq!(c.status.code(), Some(0), "{}{}", stdout(&c), stderr(&c));
    assert!(stdout(&c).contains("certified 3 segments"), "{}", stdout(&c));
}

#[test]
fn repair_with_equal_states_returns_the_input() {
    let dir = tempfile::tempdir().unwrap();
    let shape = grid_patch(5, 5, 0.02, 0.02);
    let x = dir.path().join("x.obj");
    let out = dir.path().join("out.obj");
    write_shape(&x, &shape);
    let o = twoway(&["repair", s(&x), s(&x), s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("steps,searches,residual,max_disp,ms"));
    let back = read_obj(&out).unwrap();
    for (a, b) in back.positions.iter().zip(&shape.positions) {
        assert!((a - b).norm() <= 1e-9 * b.norm().max(1e-3));
    }
    assert_eq!(back.triangles, shape.triangles);
}

#[test]
fn repair_of_spike_pair_is_certified() {
    let dir = tempfile::tempdir().unwrap();
    let f = spike(0, 0.5);
    let tris = &f.mesh.topology.triangles;
    let (x, y, out) = (dir.path().join("x.obj"), dir.path().join("y.obj"), dir.path().join("out.obj"));
    write_obj(&x, &f.mesh.positions, tris, &[]).unwrap();
    write_obj(&y, &f.target, tris, &[]).unwrap();
    let o = twoway(&["repair", s(&x), s(&y), s(&out), "--certify", "--limit", "256"]);
    assert!(o.status.success(), "{}{}", stdout(&o), stderr(&o));
    let text = stdout(&o);
    let steps: usize = text.lines().nth(1).unwrap().split(',').next().unwrap().parse().unwrap();
    assert!(steps > 0 && steps <= 256);
    assert!(text.contains(" 0 intersections"), "{text}");
    assert_eq!(read_obj(&out).unwrap().positions.len(), f.mesh.len());
}

#[test]
fn repair_rejects_nan_target_and_topology_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let shape = grid_patch(3, 3, 0.01, 0.01);
    let x = dir.path().join("x.obj");
    write_shape(&x, &shape);
    let mut bad = shape.clone();
    bad.positions[4].z = f64::NAN;
    let y = dir.path().join("nan.obj");
    write_shape(&y, &bad);
    let o = twoway(&["repair", s(&x), s(&y), s(&dir.path().join("o.obj"))]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));

    let other = dir.path().join("other.obj");
    write_shape(&other, &grid_patch(4, 3, 0.01, 0.01));
    let o = twoway(&["repair", s(&x), s(&other), s(&dir.path().join("o.obj"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("topology mismatch"));
}

#[test]
fn negative_normal_flow_shrinks_a_sphere_and_certifies() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("ball.obj");
    write_shape(&input, &icosphere(2, 0.05));
    let o = twoway(&["normalflow", s(&input), "--negative", "--iters", "2", "--certify"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains(" 0 intersections"));
    let radius = |p: &Path| {
        let d = read_obj(p).unwrap();
        d.positions.iter().map(|v| v.norm()).sum::<f64>() / d.positions.len() as f64
    };
    let r2 = radius(&dir.path().join("ball_0002.obj"));
    assert!(r2 < radius(&input) - 9e-4, "radius {r2}");
}

#[test]
fn normal_flow_rejects_open_meshes() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("patch.obj");
    write_shape(&input, &grid_patch(3, 3, 0.01, 0.01));
    let o = twoway(&["normalflow", s(&input), "--iters", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("manifold"), "{}", stderr(&o));
}

#[test]
fn certify_flags_a_crossing_frame_pair() {
    let dir = tempfile::tempdir().unwrap();
    let tri = [Vec3::new(-1.0, -1.0, 0.0), Vec3::new(1.0, -1.0, 0.0), Vec3::new(0.0, 1.0, 0.0)];
    let frame = |z: f64| {
        let pts = [tri[0], tri[1], tri[2], Vec3::new(-0.2, 0.0, z), Vec3::new(0.2, 0.0, z), Vec3::new(0.0, 0.2, z)];
        Shape { positions: pts.to_vec(), triangles: vec![[0, 1, 2], [3, 4, 5]] }
    };
    write_shape(&dir.path().join("frame_0001.obj"), &frame(0.5));
    write_shape(&dir.path().join("frame_0002.obj"), &frame(0.2));
    let o = twoway(&["certify", s(dir.path())]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    write_shape(&dir.path().join("frame_0003.obj"), &frame(-0.3));
    let o = twoway(&["certify", s(dir.path())]);
    assert_eq!(o.status.code(), Some(1), "{}", stdout(&o));
}

#[test]
fn seed_variable_is_validated_and_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let f = spike(1, 0.3);
    let tris = &f.mesh.topology.triangles;
    let (x, y) = (dir.path().join("x.obj"), dir.path().join("y.obj"));
    write_obj(&x, &f.mesh.positions, tris, &[]).unwrap();
    write_obj(&y, &f.target, tris, &[]).unwrap();
    let run = |seed: &str, out: &str| {
        Command::new(env!("CARGO_BIN_EXE_twoway"))
            .args(["repair", s(&x), s(&y), s(&dir.path().join(out)), "--limit", "64"])
            .env("TWOWAY_SEED", seed)
            .output()
            .unwrap()
    };
    assert_eq!(run("nope", "bad.obj").status.code(), Some(2));
    assert!(run("7", "a.obj").status.success());
    assert!(run("7", "b.obj").status.success());
    let a = std::fs::read(dir.path().join("a.obj")).unwrap();
    assert_eq!(a, std::fs::read(dir.path().join("b.obj")).unwrap());
}
