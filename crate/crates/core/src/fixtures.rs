//! Shipped example scenes.

use nalgebra::Vector3;

use crate::geometry::{CavityEntry, FluxEntry, FluxTag, SceneFile, SurfaceSpec};

fn sphere_cavity(center: [f64; 3], r: f64, refinement: usize) -> CavityEntry {
    CavityEntry::from_spec(&SurfaceSpec::sphere(center, r, refinement), 0.0)
}

fn scene(name: &str, outer: SurfaceSpec, cavities: Vec<CavityEntry>, probes: Vec<[f64; 3]>) -> SceneFile {
    SceneFile {
        name: Some(name.into()),
        horizon: 1.0,
        flux: FluxEntry { kind: FluxTag::Constant, value: 1.0, slope: 0.0, modulation: [0.0; 3], beta0: 2.0 },
        outer,
        cavities,
        probes,
    }
}

/// Ω sphere R = 2, cavity sphere a = 0.5, both centered at the origin; l = 4 at (3, 0, 0).
pub fn concentric(refinement: usize) -> SceneFile {
    scene(
        "concentric",
        SurfaceSpec::sphere([0.0; 3], 2.0, refinement),
        vec![sphere_cavity([0.0; 3], 0.5, refinement)],
        vec![[3.0, 0.0, 0.0]],
    )
}

/// The concentric scene without its cavity.
pub fn cavity_free(refinement: usize) -> SceneFile {
    let mut s = concentric(refinement);
    s.name = Some("cavity_free".into());
    s.cavities.clear();
    s
}

/// Two unit spheres at (±1.2, 0, 0) in Ω sphere R = 3; probe (5, 0, 0).
pub fn two_cavity(refinement: usize) -> SceneFile {
    scene(
        "two_cavity",
        SurfaceSpec::sphere([0.0; 3], 3.0, refinement),
        vec![sphere_cavity([-1.2, 0.0, 0.0], 1.0, refinement), sphere_cavity([1.2, 0.0, 0.0], 1.0, refinement)],
        vec![[5.0, 0.0, 0.0]],
    )
}

/// Two unit spheres at (±2, 0, 0), gap 2 (d₁ = 1), in Ω sphere R = 3.5. Used by
/// the off-diagonal decay audits.
pub fn two_sphere_audit(refinement: usize) -> SceneFile {
    scene(
        "two_sphere_audit",
        SurfaceSpec::sphere([0.0; 3], 3.5, refinement),
        vec![sphere_cavity([-2.0, 0.0, 0.0], 1.0, refinement), sphere_cavity([2.0, 0.0, 0.0], 1.0, refinement)],
        vec![[4.5, 0.0, 0.0]],
    )
}

/// Thin ellipsoid Ω (1, 4, 4) with a small cavity on the probe axis. From
/// p = (1.5, 0, 0) the front point (−0.3, 0, 0) and the back point (−0.7, 0, 0)
/// of the cavity both lie on the segment to y = (−1, 0, 0), giving l = 2.5 with
/// one forward-facing and one backward-facing minimizer.
pub fn blocking(refinement: usize) -> SceneFile {
    scene(
        "blocking",
        SurfaceSpec::ellipsoid([0.0; 3], [1.0, 4.0, 4.0], refinement),
        vec![sphere_cavity([-0.5, 0.0, 0.0], 0.2, refinement)],
        vec![[1.5, 0.0, 0.0]],
    )
}

/// Cavity on the probe axis near the far wall: by rotational symmetry about the
/// axis the minimizers form a ring and the chart Hessian has a zero mode.
pub fn ring(refinement: usize) -> SceneFile {
    scene(
        "ring",
        SurfaceSpec::sphere([0.0; 3], 3.0, refinement),
        vec![sphere_cavity([-2.4, 0.0, 0.0], 0.5, refinement)],
        vec![[5.0, 0.0, 0.0]],
    )
}

/// Off-center rotated ellipsoidal cavity in an ellipsoidal Ω.
pub fn ellipsoid_cavity(refinement: usize) -> SceneFile {
    let (c, s) = (0.5f64.cos(), 0.5f64.sin());
    let mut cav = CavityEntry::from_spec(&SurfaceSpec::ellipsoid([0.4, 0.3, -0.2], [0.7, 0.45, 0.4], refinement), 0.5);
    cav.rotation = Some([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]]);
    scene(
        "ellipsoid_cavity",
        SurfaceSpec::ellipsoid([0.0; 3], [2.5, 2.0, 2.0], refinement),
        vec![cav],
        vec![[3.5, 0.0, 0.0], [0.0, 3.0, 0.0]],
    )
}

/// Every shipped scene at the given refinement.
pub fn all(refinement: usize) -> Vec<SceneFile> {
    vec![
        concentric(refinement),
        cavity_free(refinement),
        two_cavity(refinement),
        two_sphere_audit(refinement),
        blocking(refinement),
        ring(refinement),
        ellipsoid_cavity(refinement),
    ]
}

/// The 26 directions of the 3×3×3 stencil, scaled to a sphere of the given radius.
pub fn probes_on_sphere(center: &Vector3<f64>, radius: f64) -> Vec<Vector3<f64>> {
    let mut out = Vec::with_capacity(26);
    for i in -1i32..=1 {
        for j in -1i32..=1 {
            for k in -1i32..=1 {
                if (i, j, k) != (0, 0, 0) {
                    let d = Vector3::new(i as f64, j as f64, k as f64).normalize();
                    out.push(center + d * radius);
                }
            }
        }
    }
    out
}
