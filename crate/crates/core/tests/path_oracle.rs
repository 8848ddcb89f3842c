use approx::assert_relative_eq;
use enclosure_core::fixtures;
use enclosure_core::geometry::{make_surface, Scene, SurfaceSpec};
use enclosure_core::path_oracle::{
    broken_path_length, check_assumptions, classify, hplus, min_broken_path, MinimizerClass,
};
use enclosure_core::Vector3;

fn v(x: f64, y: f64, z: f64) -> Vector3<f64> {
    Vector3::new(x, y, z)
}

#[test]
fn broken_path_examples() {
    assert_eq!(broken_path_length(&v(3.0, 0.0, 0.0), &v(0.5, 0.0, 0.0), &v(2.0, 0.0, 0.0)), 4.0);
    let y = v(1.0, 2.0, -1.0);
    assert_eq!(broken_path_length(&v(3.0, 0.0, 0.0), &v(3.0, 0.0, 0.0), &y), (v(3.0, 0.0, 0.0) - y).norm());
    let l = broken_path_length(&v(0.0, 3.0, 0.0), &v(0.0, 0.5, 0.0), &v(0.0, 0.0, 2.0));
    assert_relative_eq!(l, 2.5 + 4.25f64.sqrt(), epsilon = 1e-15);
}

#[test]
fn hplus_examples() {
    let h = hplus(&v(1.0, 0.0, 0.0), &v(2.0, 0.0, 0.0), &v(3.0, 0.0, 0.0), &v(1.0, 0.0, 0.0)).unwrap();
    assert_relative_eq!(h, 1.0, epsilon = 1e-15);
    let h = hplus(&v(0.0, 0.0, 0.0), &v(0.0, 1.0, 0.0), &v(2.0, 0.0, 0.0), &v(0.0, 0.0, 1.0)).unwrap();
    assert_eq!(h, 0.0);
    assert!(hplus(&v(1.0, 0.0, 0.0), &v(1.0, 0.0, 0.0), &v(3.0, 0.0, 0.0), &v(1.0, 0.0, 0.0)).is_err());
}

#[test]
fn classifier_sign_constructions() {
    let nu = v(1.0, 0.0, 0.0);
    let xi = v(0.0, 0.0, 0.0);
    assert_eq!(classify(&xi, &v(1.0, 0.0, 0.0), &v(2.0, 0.0, 0.0), &nu, 1e-6), MinimizerClass::M1);
    // ξ between p and y on one line, facing p
    assert_eq!(classify(&xi, &v(-1.0, 0.0, 0.0), &v(2.0, 0.0, 0.0), &nu, 1e-6), MinimizerClass::M2plus);
    assert_eq!(classify(&xi, &v(1.0, 0.0, 0.0), &v(-2.0, 0.0, 0.0), &nu, 1e-6), MinimizerClass::M2minus);
    assert_eq!(classify(&xi, &v(1.0, 0.0, 0.0), &v(0.0, 2.0, 1e-9), &nu, 1e-6), MinimizerClass::Mg);
}

#[test]
fn concentric_minimum_is_radial() {
    let scene = fixtures::concentric(2).build().unwrap();
    for p in [v(3.0, 0.0, 0.0), v(0.0, 0.0, 3.0), v(0.0, -3.0, 0.0)] {
        let r = min_broken_path(&scene, &p).unwrap();
        assert_relative_eq!(r.l_min, 4.0, epsilon = 1e-9);
        assert_eq!(r.minimizers.len(), 1);
        let m = &r.minimizers[0];
        let dir = p.normalize();
        assert!((m.xi() - dir * 0.5).norm() < 1e-6);
        assert!((m.y() - dir * 2.0).norm() < 1e-6);
        assert_eq!(m.class, Some(MinimizerClass::M1));
        assert!(m.hplus > 0.0);
        assert!(r.assumption_i2_holds && r.assumption_i3_holds);
    }
}

#[test]
fn concentric_assumptions_hold() {
    let scene = fixtures::concentric(2).build().unwrap();
    let a = check_assumptions(&scene, &v(3.0, 0.0, 0.0));
    assert!(a.i1 && a.i2 && a.i3, "{:?}", a.reasons);
    let m = &a.path.unwrap().minimizers[0];
    assert!(m.hessian_eigenvalues.iter().all(|e| *e > 0.0));
}

#[test]
fn two_cavity_matches_fine_brute_force() {
    let p = v(5.0, 0.0, 0.0);
    let coarse = min_broken_path(&fixtures::two_cavity(2).build().unwrap(), &p).unwrap();
    let mid = min_broken_path(&fixtures::two_cavity(4).build().unwrap(), &p).unwrap();
    let fine = min_broken_path(&fixtures::two_cavity(8).build().unwrap(), &p).unwrap();
    // node minima are upper bounds converging to the refined value like h²
    let (e4, e8) = (mid.l_brute - coarse.l_min, fine.l_brute - coarse.l_min);
    assert!(e8 >= -1e-9 && e8 < 0.5 * e4, "{e4} {e8}");
    assert!(e8 < 5e-3, "{} vs {}", fine.l_brute, coarse.l_min);
    assert_relative_eq!(coarse.l_min, 3.6, epsilon = 1e-8);
    assert!(coarse.minimizers.iter().all(|m| m.class == Some(MinimizerClass::M1) && m.cavity == 1));
}

#[test]
fn every_minimizer_attains_the_minimum_and_is_stationary() {
    for file in fixtures::all(2) {
        let scene = file.build().unwrap();
        if scene.cavities.is_empty() {
            continue;
        }
        for p in file.probes() {
            let r = min_broken_path(&scene, &p).unwrap();
            for m in &r.minimizers {
                assert!(m.value <= r.l_min * (1.0 + 1e-9), "{:?}", file.name);
                assert!(m.value >= (p - m.xi()).norm());
                assert!(m.grad_norm <= 1e-8 * scene.diameter(), "{:?}: {}", file.name, m.grad_norm);
            }
        }
    }
}

#[test]
fn blocking_scene_pairs_m2_classes() {
    let file = fixtures::blocking(2);
    let scene = file.build().unwrap();
    let p = file.probes()[0];
    let a = check_assumptions(&scene, &p);
    assert!(!a.i2);
    let r = a.path.unwrap();
    assert_relative_eq!(r.l_min, 2.5, epsilon = 1e-8);
    let has = |c| r.minimizers.iter().any(|m| m.class == Some(c));
    assert!(has(MinimizerClass::M2plus));
    assert!(has(MinimizerClass::M2minus));
}

#[test]
fn ring_scene_is_degenerate() {
    let file = fixtures::ring(2);
    let scene = file.build().unwrap();
    let a = check_assumptions(&scene, &file.probes()[0]);
    assert!(a.i1 && a.i2);
    assert!(!a.i3, "{:?}", a.reasons);
}

#[test]
fn probe_inside_is_an_error() {
    let scene = fixtures::concentric(1).build().unwrap();
    assert!(min_broken_path(&scene, &v(1.0, 0.0, 0.0)).is_err());
}

#[test]
fn rigid_motion_and_scaling() {
    let file = fixtures::ellipsoid_cavity(2);
    let scene = file.build().unwrap();
    let p = file.probes()[0];
    let l = min_broken_path(&scene, &p).unwrap().l_min;

    let q = *nalgebra::Rotation3::from_euler_angles(0.4, 0.2, -0.9).matrix();
    let t = v(0.3, -1.0, 2.0);
    let moved = Scene::new(
        make_surface(&file.outer.transformed(&q, &t)).unwrap(),
        file.cavities.iter().map(|c| make_surface(&c.spec().transformed(&q, &t)).unwrap()).collect(),
        file.cavities.iter().map(|c| c.rho).collect(),
        file.flux_model(),
    )
    .unwrap();
    let r = min_broken_path(&moved, &(q * p + t)).unwrap();
    assert_relative_eq!(r.l_min, l, epsilon = 1e-10);

    let s = 1.7;
    let scaled = Scene::new(
        make_surface(&file.outer.scaled(s)).unwrap(),
        file.cavities.iter().map(|c| make_surface(&c.spec().scaled(s)).unwrap()).collect(),
        file.cavities.iter().map(|c| c.rho / s).collect(),
        file.flux_model(),
    )
    .unwrap();
    assert_relative_eq!(min_broken_path(&scaled, &(p * s)).unwrap().l_min, s * l, max_relative = 1e-10);
}

#[test]
fn refinement_is_consistent() {
    let p = v(3.5, 0.0, 0.0);
    let ls: Vec<f64> =
        (1..=3).map(|r| min_broken_path(&fixtures::ellipsoid_cavity(r).build().unwrap(), &p).unwrap().l_min).collect();
    assert!((ls[0] - ls[2]).abs() < 1e-8 && (ls[1] - ls[2]).abs() < 1e-8, "{ls:?}");
    let _ = SurfaceSpec::sphere([0.0; 3], 1.0, 1);
}
