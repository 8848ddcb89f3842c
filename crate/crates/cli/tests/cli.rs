use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_enclosure")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit status")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Shipped fixtures written into a fresh directory.
fn fixtures() -> (TempDir, PathBuf) {
    let dir = TempDir::new().unwrap();
    let o = run(&["fixtures", "--refinement", "1", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let scenes = dir.path().join("scenes");
    (dir, scenes)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json(p: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn fixtures_write_every_scene_and_spec() {
    let (dir, scenes) = fixtures();
    for name in ["concentric", "cavity_free", "two_cavity", "two_sphere_audit", "blocking", "ring", "ellipsoid_cavity"]
    {
        assert!(scenes.join(format!("{name}.toml")).is_file(), "{name}");
    }
    for name in ["gaussian", "anisotropic", "degenerate", "holder"] {
        assert!(dir.path().join("laplace").join(format!("{name}.toml")).is_file(), "{name}");
    }
}

#[test]
fn validate_concentric_passes() {
    let (_d, scenes) = fixtures();
    let out = TempDir::new().unwrap();
    let o = run(&["scene-validate", "--scene", s(&scenes.join("concentric.toml")), "--out", s(out.path())]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("I1 true I2 true I3 true"), "{stdout}");
    let v = json(&out.path().join("validate.json"));
    assert_eq!(v[0]["report"]["path"]["minimizers"][0]["class"], "M1");
}

#[test]
fn validate_overlap_is_an_assumption_failure() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("overlap.toml");
    fs::write(
        &path,
        r#"
probes = [[4.0, 0.0, 0.0]]
[outer]
kind = "sphere"
center = [0.0, 0.0, 0.0]
radii = [3.0, 3.0, 3.0]
refinement = 1
[[cavities]]
kind = "sphere"
center = [-0.5, 0.0, 0.0]
radii = [1.0, 1.0, 1.0]
refinement = 1
[[cavities]]
kind = "sphere"
center = [0.5, 0.0, 0.0]
radii = [1.0, 1.0, 1.0]
refinement = 1
"#,
    )
    .unwrap();
    let o = run(&["scene-validate", "--scene", s(&path)]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    assert!(stderr(&o).contains("overlap"), "{}", stderr(&o));
}

#[test]
fn malformed_field_is_named() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("bad.toml");
    fs::write(
        &path,
        "[outer]\nkind = \"sphere\"\ncenter = [0.0, 0.0, 0.0]\nradius = [2.0, 2.0, 2.0]\nrefinement = 1\n",
    )
    .unwrap();
    let o = run(&["scene-validate", "--scene", s(&path)]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("radius"), "{}", stderr(&o));
}

#[test]
fn blocking_fails_i2() {
    let (_d, scenes) = fixtures();
    let o = run(&["scene-validate", "--scene", s(&scenes.join("blocking.toml"))]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stdout).contains("M2minus"));
}

#[test]
fn extract_concentric_recovers_length() {
    let (_d, scenes) = fixtures();
    let out = TempDir::new().unwrap();
    let o = run(&["extract", "--scene", s(&scenes.join("concentric.toml")), "--out", s(out.path())]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v = json(&out.path().join("probe_0.json"));
    assert_eq!(v["oracle_value"].as_f64().unwrap(), 4.0);
    assert!(v["rel_error"].as_f64().unwrap() <= 0.02, "{v}");
    assert!(out.path().join("probe_0.csv").is_file());
}

#[test]
fn probe_inside_gets_an_error_entry() {
    let (_d, scenes) = fixtures();
    let out = TempDir::new().unwrap();
    let o = run(&[
        "extract",
        "--scene",
        s(&scenes.join("concentric.toml")),
        "--probe",
        "3,0,0",
        "--probe",
        "1,0,0",
        "--count",
        "5",
        "--out",
        s(out.path()),
    ]);
    assert_eq!(code(&o), 3);
    let v = json(&out.path().join("summary.json"));
    assert_eq!(v["probes"][0]["status"], "ok");
    assert_eq!(v["probes"][1]["status"], "error");
    assert!(v["probes"][1]["error"].as_str().unwrap().contains("outside"));
}

#[test]
fn grid_errors_are_usage_errors() {
    let (_d, scenes) = fixtures();
    let out = TempDir::new().unwrap();
    let scene = scenes.join("concentric.toml");
    for extra in [&["--count", "2"][..], &["--mu-min", "40", "--mu-max", "8"], &["--region", "log", "--mu-min", "2"]] {
        let mut args = vec!["sweep", "--scene", s(&scene), "--out", s(out.path())];
        args.extend_from_slice(extra);
        let o = run(&args);
        assert_eq!(code(&o), 1, "{extra:?}: {}", stderr(&o));
    }
    assert_eq!(code(&run(&["sweep", "--scene", s(&scene), "--probe", "1,2", "--out", s(out.path())])), 1);
    assert_eq!(code(&run(&["sweep", "--out", s(out.path())])), 1);
}

#[test]
fn sweep_is_deterministic_and_refits_from_csv() {
    let (_d, scenes) = fixtures();
    let scene = scenes.join("two_cavity.toml");
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    for dir in [&a, &b] {
        let o = run(&[
            "sweep",
            "--scene",
            s(&scene),
            "--count",
            "5",
            "--noise",
            "0.01",
            "--seed",
            "7",
            "--region",
            "sector",
            "--out",
            s(dir.path()),
        ]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    for f in ["probe_0.csv", "summary.json"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    let summary = json(&a.path().join("summary.json"));
    let l_sweep = summary["probes"][0]["l_hat"].as_f64().unwrap();

    let refit = TempDir::new().unwrap();
    let o = run(&[
        "extract",
        "--curve",
        s(&a.path().join("probe_0.csv")),
        "--probe",
        "5,0,0",
        "--scene",
        s(&scene),
        "--region",
        "sector",
        "--out",
        s(refit.path()),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v = json(&refit.path().join("probe_0.json"));
    assert!((v["l_hat"].as_f64().unwrap() - l_sweep).abs() <= 1e-12 * l_sweep);
    assert_eq!(v["region"], "sector");
    assert!(v["oracle_value"].as_f64().is_some());
}

#[test]
fn laplace_audit_passes_on_shipped_specs() {
    let out = TempDir::new().unwrap();
    let o = run(&["audit", "laplace", "--out", s(out.path())]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v = json(&out.path().join("summary.json"));
    assert_eq!(v["pass"], true);
    let csv = fs::read_to_string(out.path().join("gaussian_remainder.csv")).unwrap();
    for line in csv.lines().skip(1) {
        let rem: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert!(rem <= 1e-8, "{line}");
    }
}

#[test]
fn densities_audit_slope() {
    let (_d, scenes) = fixtures();
    let out = TempDir::new().unwrap();
    let o = run(&["audit", "densities", "--scene", s(&scenes.join("concentric.toml")), "--out", s(out.path())]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v = json(&out.path().join("summary.json"));
    assert!(v["checks"][0]["value"].as_f64().unwrap() <= -0.8);
}

#[test]
fn kernels_audit_on_two_spheres() {
    let (_d, scenes) = fixtures();
    let out = TempDir::new().unwrap();
    let o = run(&["audit", "kernels", "--scene", s(&scenes.join("two_sphere_audit.toml")), "--out", s(out.path())]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v = json(&out.path().join("summary.json"));
    assert_eq!(v["checks"].as_array().unwrap().len(), 3);
    assert!(out.path().join("w_decay.csv").is_file() && out.path().join("m1_decay.csv").is_file());
}

#[test]
fn reconstruct_concentric_is_sound() {
    let (_d, scenes) = fixtures();
    let out = TempDir::new().unwrap();
    let o = run(&[
        "reconstruct",
        "--scene",
        s(&scenes.join("concentric.toml")),
        "--probe-radius",
        "3",
        "--out",
        s(out.path()),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v = json(&out.path().join("soundness.json"));
    assert_eq!(v["probes"].as_array().unwrap().len(), 26);
    assert_eq!(v["report"]["violations"], 0);
    assert!(v["report"]["carved_voxels"].as_u64().unwrap() > 0);
    assert!(fs::read_to_string(out.path().join("enclosure.vtk")).unwrap().starts_with("# vtk DataFile"));
    assert!(out.path().join("enclosure.csv").is_file());
}

#[test]
fn reconstruct_single_extraction() {
    let (_d, scenes) = fixtures();
    let scene = scenes.join("concentric.toml");
    let ex = TempDir::new().unwrap();
    assert_eq!(code(&run(&["extract", "--scene", s(&scene), "--count", "5", "--out", s(ex.path())])), 0);
    let out = TempDir::new().unwrap();
    let o = run(&[
        "reconstruct",
        "--scene",
        s(&scene),
        "--extraction",
        s(&ex.path().join("probe_0.json")),
        "--out",
        s(out.path()),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v = json(&out.path().join("soundness.json"));
    assert_eq!(v["probes"][0]["source"], "extraction");
    assert_eq!(v["report"]["violations"], 0);
}

#[test]
fn overestimated_length_with_zero_margin_is_reported() {
    let (_d, scenes) = fixtures();
    let dir = TempDir::new().unwrap();
    // l̂ 10% above the true 4.0, as a badly perturbed fit would give.
    let ex = dir.path().join("biased.json");
    fs::write(
        &ex,
        r#"{"p": [3.0, 0.0, 0.0], "l_hat": 4.4, "stderr": 0.0, "region": "real", "mu_range": [8.0, 40.0], "oracle_value": null, "rel_error": null}"#,
    )
    .unwrap();
    let out = dir.path().join("out");
    let scene = scenes.join("concentric.toml");
    let o = run(&["reconstruct", "--scene", s(&scene), "--extraction", s(&ex), "--margin", "0", "--out", s(&out)]);
    assert_eq!(code(&o), 2);
    assert!(json(&out.join("soundness.json"))["report"]["violations"].as_u64().unwrap() > 0);
    assert_eq!(
        code(&run(&["reconstruct", "--scene", s(&scene), "--extraction", s(&ex), "--margin", "-1", "--out", s(&out)])),
        1
    );
}

#[test]
fn shipped_fixture_files_are_current() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&run(&["fixtures", "--refinement", "3", "--out", s(dir.path())])), 0);
    let shipped = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures");
    for sub in ["scenes", "laplace"] {
        for entry in fs::read_dir(dir.path().join(sub)).unwrap() {
            let path = entry.unwrap().path();
            let name = path.file_name().unwrap();
            let expected = fs::read_to_string(shipped.join(sub).join(name)).unwrap();
            assert_eq!(fs::read_to_string(&path).unwrap(), expected, "{sub}/{name:?} is stale");
        }
    }
}
