//! Weakly singular surface integrals on analytic surfaces, computed in polar
//! coordinates about the target node on the reference sphere ("rotated pole").
//! The sin Θ Jacobian cancels the 1/r singularity, and the Θ panels are graded
//! on the decay length 1/μ.

use nalgebra::Vector3;
use num_complex::Complex64 as C64;

use super::kernels::INV_2PI;
use crate::geometry::{tangent_frame, Quadric};
use crate::quadrature::gauss_legendre;

const GL_PER_PANEL: usize = 12;
const N_PHI: usize = 40;

/// Polar rule about u₀: Θ measured from u₀ up to `theta_max(Φ)`, Φ around it.
/// Calls `f(u, u − u₀, jacobian·weight)` at every node; the difference is
/// formed without cancellation so that chords stay accurate near the pole.
fn polar_for_each(
    u0: &Vector3<f64>,
    shape: &Quadric,
    mu: f64,
    theta_max: impl Fn(f64) -> f64,
    mut f: impl FnMut(&Vector3<f64>, &Vector3<f64>, f64),
) {
    let scale = if mu > 0.0 { (1.0 / (mu * shape.max_radius())).min(0.25) } else { 0.25 };
    let (gx, gw) = gauss_legendre(GL_PER_PANEL);
    let (a, b) = tangent_frame(u0);
    let dphi = 2.0 * std::f64::consts::PI / N_PHI as f64;
    for k in 0..N_PHI {
        let phi = dphi * k as f64;
        let dir = a * phi.cos() + b * phi.sin();
        let tmax = theta_max(phi);
        let mut lo = 0.0;
        let mut width = scale;
        while lo < tmax {
            let hi = (lo + width).min(tmax);
            let h = 0.5 * (hi - lo);
            let c = 0.5 * (hi + lo);
            for (x, w) in gx.iter().zip(&gw) {
                let th = c + h * x;
                let (s, c) = th.sin_cos();
                let u = u0 * c + dir * s;
                let half = (0.5 * th).sin();
                let du = u0 * (-2.0 * half * half) + dir * s;
                let jac = shape.area_factor(&u) * s * w * h * dphi;
                f(&u, &du, jac);
            }
            lo = hi;
            width *= 2.0;
        }
    }
}

/// Exact self-interaction moments at one node:
/// `e` = ∫(1/2π)e^{−λr}/r, `h0` = ∫(1/2π)e^{−λr}H₀(ξ,ζ), `h0r` = ∫(1/2π)e^{−λr}H₀/r,
/// with H₀(ξ,ζ) = ν_ξ·(ζ−ξ)/r² and ν_ξ the normal at the target. The `*1`
/// fields are the first moments, the same integrals weighted by ζ − ξ.
#[derive(Debug, Clone, Copy)]
pub struct SelfMoments {
    pub e: C64,
    pub h0: C64,
    pub h0r: C64,
    pub e1: Vector3<C64>,
    pub h01: Vector3<C64>,
    pub h0r1: Vector3<C64>,
}

impl Default for SelfMoments {
    fn default() -> Self {
        let z = C64::new(0.0, 0.0);
        Self { e: z, h0: z, h0r: z, e1: Vector3::repeat(z), h01: Vector3::repeat(z), h0r1: Vector3::repeat(z) }
    }
}

impl SelfMoments {
    /// Moments at another node of the same sphere, whose first moments are normal
    /// by symmetry: only the normal component is carried over.
    pub fn moved_on_sphere(&self, from: &Vector3<f64>, to: &Vector3<f64>) -> Self {
        let along = |v: &Vector3<C64>| {
            let c = v.x * from.x + v.y * from.y + v.z * from.z;
            to.map(|t| c * t)
        };
        Self { e1: along(&self.e1), h01: along(&self.h01), h0r1: along(&self.h0r1), ..*self }
    }
}

pub fn self_moments(shape: &Quadric, u0: &Vector3<f64>, lambda: C64) -> SelfMoments {
    let nu = shape.normal(u0);
    let mut m = SelfMoments::default();
    polar_for_each(
        u0,
        shape,
        lambda.norm(),
        |_| std::f64::consts::PI,
        |_, du, jac| {
            let d = shape.rotation * du.component_mul(&shape.radii);
            let r2 = d.norm_squared();
            if r2 == 0.0 {
                return;
            }
            let r = r2.sqrt();
            let h0 = nu.dot(&d) / r2;
            let ex = (-lambda * r).exp() * (INV_2PI * jac);
            let (a, b, c) = (ex / r, ex * h0, ex * (h0 / r));
            m.e += a;
            m.h0 += b;
            m.h0r += c;
            let dc = d.map(|t| C64::new(t, 0.0));
            m.e1 += dc * a;
            m.h01 += dc * b;
            m.h0r1 += dc * c;
        },
    );
    m
}

/// ∫_S f(ζ, ζ − ξ) dS_ζ by the polar rule about ξ = shape.point(u₀), for
/// integrands with at most a 1/r singularity at ξ. Used as a reference for the
/// Nyström rules.
pub fn polar_integral(
    shape: &Quadric,
    u0: &Vector3<f64>,
    mu: f64,
    mut f: impl FnMut(&Vector3<f64>, &Vector3<f64>) -> C64,
) -> C64 {
    let x0 = shape.point(u0);
    let mut acc = C64::new(0.0, 0.0);
    polar_for_each(
        u0,
        shape,
        mu,
        |_| std::f64::consts::PI,
        |_, du, jac| {
            let d = shape.rotation * du.component_mul(&shape.radii);
            if d.norm_squared() > 0.0 {
                acc += f(&(x0 + d), &d) * jac;
            }
        },
    );
    acc
}

/// ∫ over {ζ ∈ S : |ζ − ξ| < radius} of f(r) dS, for a radial integrand f that
/// may be singular like 1/r at the target.
pub fn ball_integral(shape: &Quadric, u0: &Vector3<f64>, mu: f64, radius: f64, f: impl Fn(f64) -> f64) -> f64 {
    let x0 = shape.point(u0);
    let (a, b) = tangent_frame(u0);
    let r_at = |phi: f64, th: f64| {
        let u = u0 * th.cos() + (a * phi.cos() + b * phi.sin()) * th.sin();
        (shape.point(&u) - x0).norm()
    };
    // Along each ray r grows from 0; the cut is its first crossing of `radius`.
    let theta_cut = move |phi: f64| {
        let n = 256;
        let mut prev = 0.0;
        for k in 1..=n {
            let th = std::f64::consts::PI * k as f64 / n as f64;
            if r_at(phi, th) >= radius {
                let (mut lo, mut hi) = (prev, th);
                for _ in 0..80 {
                    let mid = 0.5 * (lo + hi);
                    if r_at(phi, mid) < radius {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                return 0.5 * (lo + hi);
            }
            prev = th;
        }
        std::f64::consts::PI
    };
    let mut acc = 0.0;
    polar_for_each(u0, shape, mu, theta_cut, |_, du, jac| {
        let r = (shape.rotation * du.component_mul(&shape.radii)).norm();
        if r > 0.0 {
            acc += f(r) * jac;
        }
    });
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Matrix3;

    fn sphere(a: f64) -> Quadric {
        Quadric::new(Vector3::new(0.3, -0.1, 0.2), Matrix3::identity(), Vector3::repeat(a))
    }

    #[test]
    fn sphere_moments_match_closed_forms() {
        for a in [0.5, 1.0, 2.0] {
            for lam in [C64::new(0.5, 0.0), C64::new(8.0, 0.0), C64::new(40.0, 10.0), C64::new(64.0, 0.0)] {
                let q = sphere(a);
                let u0 = Vector3::new(0.3, 0.4, (1.0f64 - 0.25).sqrt());
                let m = self_moments(&q, &u0, lam);
                let one = C64::new(1.0, 0.0);
                let e2 = (-lam * 2.0 * a).exp();
                let exact_e = (one - e2) / lam;
                // ∫₀^{2a} r e^{−λr} dr
                let first = (one - e2 * (one + lam * 2.0 * a)) / (lam * lam);
                let exact_h0 = -first / (2.0 * a);
                let exact_h0r = -exact_e / (2.0 * a);
                assert!((m.e - exact_e).norm() < 1e-11 * exact_e.norm(), "a={a} λ={lam}: {} vs {}", m.e, exact_e);
                assert!((m.h0 - exact_h0).norm() < 1e-11 * exact_h0.norm(), "a={a} λ={lam}: {} vs {}", m.h0, exact_h0);
                assert!(
                    (m.h0r - exact_h0r).norm() < 1e-11 * exact_h0r.norm(),
                    "a={a} λ={lam}: {} vs {}",
                    m.h0r,
                    exact_h0r
                );
            }
        }
    }

    #[test]
    fn ball_integral_on_sphere() {
        let q = sphere(1.0);
        let u0 = Vector3::z();
        // On a sphere dS = 2πr dr, so ∫_{r<ρ} dS/r = 2πρ.
        let v = ball_integral(&q, &u0, 0.0, 0.7, |r| 1.0 / r);
        assert!((v - 2.0 * std::f64::consts::PI * 0.7).abs() < 1e-9, "{v}");
        let full = ball_integral(&q, &u0, 0.0, 10.0, |_| 1.0);
        assert!((full - 4.0 * std::f64::consts::PI).abs() < 1e-10);
    }
}
