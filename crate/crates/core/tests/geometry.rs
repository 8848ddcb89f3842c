mod common;

use approx::assert_relative_eq;
use enclosure_core::geometry::{convexity_audit, grid_size, local_chart, make_surface, SurfaceSpec};
use enclosure_core::{Error, Vector3};
use nalgebra::{Matrix3, Rotation3, Vector2};

use common::{ellipsoid_area, peanut, prolate_area, rel};

#[test]
fn sphere_area_converges() {
    let mut errs = Vec::new();
    for r in 1..=3 {
        let s = make_surface(&SurfaceSpec::sphere([0.0; 3], 1.0, r)).unwrap();
        errs.push(rel(s.area(), 4.0 * std::f64::consts::PI));
    }
    assert!(errs[2] < 1e-12, "{errs:?}");
}

#[test]
fn prolate_area_matches_closed_form() {
    let s = make_surface(&SurfaceSpec::ellipsoid([0.0; 3], [2.0, 1.0, 1.0], 4)).unwrap();
    let exact = prolate_area(2.0, 1.0);
    assert!(rel(s.area(), exact) < 5e-3, "{} vs {exact}", s.area());
    // the general formula reduces to the prolate one
    assert_relative_eq!(ellipsoid_area(2.0, 1.0, 1.0 - 1e-9), exact, max_relative = 1e-6);
}

#[test]
fn triaxial_area_matches_elliptic_integrals() {
    let s = make_surface(&SurfaceSpec::ellipsoid([0.3, -0.1, 0.2], [0.6, 1.2, 0.8], 3)).unwrap();
    let exact = ellipsoid_area(1.2, 0.8, 0.6);
    assert!(rel(s.area(), exact) < 5e-3, "{} vs {exact}", s.area());
}

#[test]
fn grid_sizes_grow_with_refinement() {
    let (a, b) = grid_size(0);
    let (c, d) = grid_size(3);
    assert!(c > a && d > b);
    let s = make_surface(&SurfaceSpec::sphere([0.0; 3], 1.0, 2)).unwrap();
    let (nt, np) = grid_size(2);
    assert_eq!(s.len(), nt * np);
}

#[test]
fn normals_point_outward_and_are_unit() {
    let spec = SurfaceSpec::ellipsoid([1.0, 0.0, 0.0], [0.5, 0.7, 0.3], 2);
    let s = make_surface(&spec).unwrap();
    let c = Vector3::new(1.0, 0.0, 0.0);
    for (x, n) in s.nodes.iter().zip(&s.normals) {
        assert_relative_eq!(n.norm(), 1.0, epsilon = 1e-12);
        assert!(n.dot(&(x - c)) > 0.0);
    }
}

#[test]
fn spheres_and_ellipsoids_are_strictly_convex() {
    let s = make_surface(&SurfaceSpec::sphere([0.0; 3], 0.5, 2)).unwrap();
    let r = convexity_audit(&s).unwrap();
    // a sphere of radius a has chord ratio exactly 1/(2a)
    assert_relative_eq!(r.m0, 1.0, max_relative = 1e-6);
    assert_relative_eq!(r.m1, 1.0, max_relative = 1e-6);
    let e = make_surface(&SurfaceSpec::ellipsoid([0.0; 3], [1.0, 0.6, 0.4], 2)).unwrap();
    let r = convexity_audit(&e).unwrap();
    assert!(r.m0 > 0.0 && r.m1 >= r.m0);
}

#[test]
fn peanut_is_rejected() {
    let s = peanut(24, 48);
    assert!(matches!(convexity_audit(&s), Err(Error::NotStrictlyConvex(..))));
}

#[test]
fn chart_hessian_is_the_second_fundamental_form() {
    let s = make_surface(&SurfaceSpec::ellipsoid([0.0; 3], [1.2, 0.8, 0.6], 3)).unwrap();
    for node in [0, 17, s.len() / 2, s.len() - 5] {
        let c = local_chart(&s, node).unwrap();
        let h = c.hessian_at_base();
        let fd = c.hessian_fd(&Vector2::zeros()).unwrap();
        assert!((h - fd).amax() < 1e-5 * h.amax(), "node {node}: {h} vs {fd}");
        assert!(c.g(&Vector2::zeros()).unwrap().abs() < 1e-14);
        assert!(c.gradient_fd(&Vector2::zeros()).unwrap().norm() < 1e-8);
        let eig = h.symmetric_eigenvalues();
        assert!(eig.min() > 0.0);
    }
}

#[test]
fn sampled_surfaces_have_no_chart() {
    let s = peanut(8, 16);
    assert!(local_chart(&s, 0).is_err());
}

#[test]
fn rigid_motion_preserves_area_and_convexity() {
    let spec = SurfaceSpec::ellipsoid([0.2, 0.0, 0.0], [1.0, 0.7, 0.5], 2);
    let q: Matrix3<f64> = *Rotation3::from_euler_angles(0.3, -1.1, 2.0).matrix();
    let t = Vector3::new(1.0, -2.0, 0.5);
    let a = make_surface(&spec).unwrap();
    let b = make_surface(&spec.transformed(&q, &t)).unwrap();
    assert_relative_eq!(a.area(), b.area(), max_relative = 1e-12);
    for (x, y) in a.nodes.iter().zip(&b.nodes) {
        assert!((q * x + t - y).norm() < 1e-12);
    }
    let (ra, rb) = (convexity_audit(&a).unwrap(), convexity_audit(&b).unwrap());
    assert_relative_eq!(ra.m0, rb.m0, max_relative = 1e-9);
    assert_relative_eq!(ra.m1, rb.m1, max_relative = 1e-9);
}

#[test]
fn scaling_scales_area_quadratically() {
    let spec = SurfaceSpec::ellipsoid([0.5, 0.5, 0.0], [1.0, 0.7, 0.5], 2);
    let a = make_surface(&spec).unwrap();
    let b = make_surface(&spec.scaled(2.5)).unwrap();
    assert_relative_eq!(b.area(), 6.25 * a.area(), max_relative = 1e-12);
}

#[test]
fn invalid_specs_are_rejected() {
    assert!(make_surface(&SurfaceSpec::sphere([0.0; 3], -1.0, 2)).is_err());
    assert!(make_surface(&SurfaceSpec::ellipsoid([0.0; 3], [1.0, 0.0, 1.0], 2)).is_err());
}
