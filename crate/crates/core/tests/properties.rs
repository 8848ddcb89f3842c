use enclosure_core::bie::{fundamental_solution, Region};
use enclosure_core::enclosure::{carve, EnclosureGrid, VoxelState};
use enclosure_core::fixtures;
use enclosure_core::geometry::{make_surface, Scene, SceneFile};
use enclosure_core::path_oracle::{min_broken_path, MinimizerClass};
use enclosure_core::spectral::{fit_length, lambda_grid, ImProfile};
use enclosure_core::{Vector3, C64};
use nalgebra::Rotation3;
use proptest::prelude::*;

fn vec3() -> impl Strategy<Value = Vector3<f64>> {
    (-3.0..3.0f64, -3.0..3.0f64, -3.0..3.0f64).prop_map(|(x, y, z)| Vector3::new(x, y, z))
}

fn moved(file: &SceneFile, q: &nalgebra::Matrix3<f64>, t: &Vector3<f64>, s: f64) -> Scene {
    Scene::new(
        make_surface(&file.outer.transformed(q, t).scaled_about(t, s)).unwrap(),
        file.cavities.iter().map(|c| make_surface(&c.spec().transformed(q, t).scaled_about(t, s)).unwrap()).collect(),
        file.cavities.iter().map(|c| c.rho / s).collect(),
        file.flux_model(),
    )
    .unwrap()
}

trait ScaledAbout {
    fn scaled_about(&self, c: &Vector3<f64>, s: f64) -> Self;
}

impl ScaledAbout for enclosure_core::geometry::SurfaceSpec {
    fn scaled_about(&self, c: &Vector3<f64>, s: f64) -> Self {
        let mut out = self.scaled(s);
        let ctr = (Vector3::from(self.center) - c) * s + c;
        out.center = [ctr.x, ctr.y, ctr.z];
        out
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kernel_is_symmetric(x in vec3(), y in vec3(), re in 0.1..40.0f64, im in -20.0..20.0f64) {
        prop_assume!((x - y).norm() > 1e-6);
        let lam = C64::new(re, im);
        prop_assert_eq!(fundamental_solution(lam, &x, &y).unwrap(), fundamental_solution(lam, &y, &x).unwrap());
    }

    #[test]
    fn fit_is_idempotent(l in 0.5..8.0f64, a in -3.0..3.0f64, b in -5.0..5.0f64, lo in 4.0..10.0f64) {
        let mu: Vec<f64> = (0..8).map(|k| lo * (1.0 + 0.3 * k as f64)).collect();
        let y: Vec<f64> = mu.iter().map(|m| -l * m + a * m.ln() + b).collect();
        let f = fit_length(&mu, &y).unwrap();
        prop_assert!((f.l_hat - l).abs() < 1e-10 * l.max(1.0));
        prop_assert!((f.a - a).abs() < 1e-8 && (f.b - b).abs() < 1e-8);
    }

    #[test]
    fn grids_honour_their_region(lo in 3.0..20.0f64, span in 1.5..10.0f64, n in 3usize..20, d in 0.05..0.9f64) {
        for (region, prof) in [
            (Region::Sector { delta0: d }, ImProfile::SectorEdge),
            (Region::LogRegion { delta1: d }, ImProfile::LogEdge),
            (Region::RealAxis, ImProfile::Zero),
        ] {
            let g = lambda_grid(region, lo, lo * span, n, prof).unwrap();
            prop_assert_eq!(g.samples.len(), n);
            prop_assert!(g.samples.iter().all(|s| region.contains(s.lambda)));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn length_is_rigid_invariant_and_scale_covariant(
        a in -3.1..3.1f64, b in -1.5..1.5f64, c in -3.1..3.1f64,
        t in vec3(), s in 0.3..3.0f64,
    ) {
        let file = fixtures::ellipsoid_cavity(1);
        let p = file.probes()[0];
        let l = min_broken_path(&file.build().unwrap(), &p).unwrap().l_min;
        let q = *Rotation3::from_euler_angles(a, b, c).matrix();
        let scene = moved(&file, &q, &t, 1.0);
        let lr = min_broken_path(&scene, &(q * p + t)).unwrap().l_min;
        prop_assert!((lr - l).abs() < 1e-10 * l.max(1.0), "{} vs {}", lr, l);
        let scene = moved(&file, &q, &t, s);
        let ls = min_broken_path(&scene, &((q * p) * s + t)).unwrap().l_min;
        prop_assert!((ls - s * l).abs() < 1e-9 * s * l, "{} vs {}", ls, s * l);
    }

    #[test]
    fn backward_minimizers_come_in_pairs(x in -0.7..-0.3f64, r in 0.1..0.2f64) {
        let mut file = fixtures::blocking(1);
        file.cavities[0].center = [x, 0.0, 0.0];
        file.cavities[0].radii = [r; 3];
        let scene = file.build().unwrap();
        let rep = min_broken_path(&scene, &file.probes()[0]).unwrap();
        let has = |k| rep.minimizers.iter().any(|m| m.class == Some(k));
        if has(MinimizerClass::M2plus) {
            prop_assert!(has(MinimizerClass::M2minus));
        }
        prop_assert!(has(MinimizerClass::M2plus));
    }

    #[test]
    fn carving_order_does_not_matter(perm in Just((0..26usize).collect::<Vec<_>>()).prop_shuffle(), l in 3.0..4.2f64) {
        let scene = fixtures::concentric(1).build().unwrap();
        let probes = fixtures::probes_on_sphere(&Vector3::zeros(), 3.0);
        let mut a = EnclosureGrid::new(&scene, 0.25).unwrap();
        let mut b = a.clone();
        for p in &probes {
            carve(&mut a, p, l, 0.0);
        }
        let mut retained = Vec::new();
        for &k in &perm {
            carve(&mut b, &probes[k], l, 0.0);
            retained.push(b.count(VoxelState::Retained));
        }
        prop_assert!(retained.windows(2).all(|w| w[1] <= w[0]));
        prop_assert_eq!(a.state, b.state);
    }
}
