use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use c1spline::io::{parse_description, sample_curve, Model};
use c1spline::quadrics::ellipse_residual;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_c1spline"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn p(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}

fn s(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn load(path: &Path) -> Model {
    parse_description(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn metric(out: &str, name: &str) -> f64 {
    out.lines()
        .find_map(|l| l.strip_prefix(name))
        .and_then(|rest| rest.split_whitespace().next())
        .and_then(|v| v.parse().ok())
        .unwrap_or_else(|| panic!("no {name} in {out}"))
}

#[test]
fn make_then_verify_reports_the_library_residual() {
    let dir = tempfile::tempdir().unwrap();
    let file = p(dir.path(), "e.json");
    let made = run(&["make", "--recipe", "ellipse-quadratic", "--ax", "1", "--ay", "0.5", "-o", s(&file)]);
    assert!(made.status.success());
    let out = run(&["verify", s(&file)]);
    assert_eq!(out.status.code(), Some(0));
    let reported = metric(&stdout(&out), "residual");
    let Model::Curve { curve, .. } = load(&file) else { panic!("expected a curve") };
    assert_eq!(reported, ellipse_residual(&curve, [1.0, 0.5], 10_000).unwrap());
    assert!(reported <= 1e-12);
}

#[test]
fn empty_plan_keeps_samples() {
    let dir = tempfile::tempdir().unwrap();
    let (file, plan, out) = (p(dir.path(), "e.json"), p(dir.path(), "plan.json"), p(dir.path(), "f.json"));
    run(&["make", "--recipe", "ellipse-322", "--ax", "2", "--ay", "0.7", "-o", s(&file)]);
    std::fs::write(&plan, r#"{"segments": [{}, {}, {}]}"#).unwrap();
    let refined = run(&["refine", s(&file), "--plan", s(&plan), "-o", s(&out)]);
    assert!(refined.status.success(), "{}", String::from_utf8_lossy(&refined.stderr));
    assert_eq!(metric(&stdout(&refined), "reproduction-error"), 0.0);
    let (Model::Curve { curve: a, .. }, Model::Curve { curve: b, .. }) = (load(&file), load(&out)) else {
        panic!("expected curves")
    };
    assert_eq!(sample_curve(&a, 101).unwrap(), sample_curve(&b, 101).unwrap());
}

#[test]
fn ellipsoid_export_is_a_closed_mesh_on_the_surface() {
    let dir = tempfile::tempdir().unwrap();
    let (file, obj) = (p(dir.path(), "s.json"), p(dir.path(), "s.obj"));
    let made = run(&["make", "--recipe", "ellipsoid-33", "--ax", "1", "--ay", "0.5", "--az", "0.3333333333333333", "-o", s(&file)]);
    assert!(made.status.success());
    let out = run(&["export", s(&file), "--obj", s(&obj), "--nu", "16", "--nv", "9"]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("euler 2 boundary-loops 0"));
    let text = std::fs::read_to_string(&obj).unwrap();
    let axes = [1.0, 0.5, 0.3333333333333333];
    let mut vertices = 0;
    for line in text.lines().filter(|l| l.starts_with("v ")) {
        let v: Vec<f64> = line[2..].split_whitespace().map(|x| x.parse().unwrap()).collect();
        let r: f64 = v.iter().zip(axes).map(|(x, a)| (x / a).powi(2)).sum();
        assert!((r - 1.0).abs() <= 1e-12);
        vertices += 1;
    }
    assert_eq!(vertices, 2 + 16 * 7);
}

#[test]
fn perturbed_models_stay_smooth() {
    let dir = tempfile::tempdir().unwrap();
    for recipe in ["ellipse-cubic", "ellipsoid-22"] {
        let (file, pert) = (p(dir.path(), "m.json"), p(dir.path(), "p.json"));
        run(&["make", "--recipe", recipe, "-o", s(&file)]);
        assert!(run(&["perturb", s(&file), "-o", s(&pert)]).status.success());
        let out = run(&["verify", s(&pert)]);
        assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
        assert!(!stdout(&out).contains("residual"));
    }
}

#[test]
fn eval_prints_points() {
    let dir = tempfile::tempdir().unwrap();
    let file = p(dir.path(), "e.json");
    run(&["make", "--recipe", "ellipse-quadratic", "--ax", "3", "--ay", "2", "-o", s(&file)]);
    let out = run(&["eval", s(&file), "--t", "0"]);
    assert_eq!(stdout(&out).trim(), "0 2");
    assert_eq!(run(&["eval", s(&file), "--s", "0", "--t", "0"]).status.code(), Some(2));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let file = p(dir.path(), "e.json");
    assert_eq!(run(&["make", "--recipe", "parabola", "-o", s(&file)]).status.code(), Some(2));
    assert_eq!(run(&["verify", s(&p(dir.path(), "missing.json"))]).status.code(), Some(2));

    run(&["make", "--recipe", "ellipse-cubic", "-o", s(&file)]);
    let plan = p(dir.path(), "plan.json");
    std::fs::write(&plan, "{ not json").unwrap();
    let bad = run(&["refine", s(&file), "--plan", s(&plan), "-o", s(&p(dir.path(), "f.json"))]);
    assert_eq!(bad.status.code(), Some(2));

    // moving a control point while keeping the recipe breaks exactness
    let text = std::fs::read_to_string(&file).unwrap();
    let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    let mut doc = doc;
    doc["control_points"][0][0] = serde_json::json!(5.0);
    let moved = p(dir.path(), "moved.json");
    std::fs::write(&moved, doc.to_string()).unwrap();
    let out = run(&["verify", s(&moved)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("FAIL"));
}
