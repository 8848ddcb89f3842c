#![allow(dead_code)]

use enclosure_core::geometry::DiscretizedSurface;
use enclosure_core::{Vector3, C64};
use std::f64::consts::PI;

fn i0(x: C64) -> C64 {
    x.sinh() / x
}
fn i0p(x: C64) -> C64 {
    x.cosh() / x - x.sinh() / (x * x)
}
fn k0(x: C64) -> C64 {
    (-x).exp() / x
}
fn k0p(x: C64) -> C64 {
    -(-x).exp() * (1.0 / x + 1.0 / (x * x))
}

/// Radial solution of (Δ − λ²)w = 0 in a < r < R with ∂_r w(R) = g and
/// (∂_r + ρ)w(a) = 0, plus the indicator for a probe at distance `pd` from the
/// common center.
pub struct Concentric {
    pub w_inner: C64,
    pub w_outer: C64,
    pub indicator: C64,
}

pub fn concentric_exact(lambda: C64, big_r: f64, a: f64, rho: f64, g: C64, pd: f64) -> Concentric {
    let (xr, xa) = (lambda * big_r, lambda * a);
    // [m11 m12; m21 m22](A, B) = (g, 0)
    let m11 = lambda * i0p(xr);
    let m12 = lambda * k0p(xr);
    let m21 = lambda * i0p(xa) + rho * i0(xa);
    let m22 = lambda * k0p(xa) + rho * k0(xa);
    let det = m11 * m22 - m12 * m21;
    let ca = g * m22 / det;
    let cb = -g * m21 / det;
    let w = |x: C64| ca * i0(x) + cb * k0(x);
    // S(s) = ∫_{|ξ|=s} e^{−λ|ξ−p|}/(2π|ξ−p|) dS.
    let s = |s: f64| s / (pd * lambda) * ((-lambda * (pd - s)).exp() - (-lambda * (pd + s)).exp());
    let h = 1e-6 * a;
    let ds = (s(a + h) - s(a - h)) / (2.0 * h);
    let sa = s(a);
    let indicator = w(xa) * (ds - 2.0 * sa / a + rho * sa);
    Concentric { w_inner: w(xa), w_outer: w(xr), indicator }
}

/// Composite Simpson on [a, b] with n (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for k in 1..n {
        s += f(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// Surface area of the ellipsoid with semi-axes a ≥ b ≥ c, via the incomplete
/// elliptic integrals evaluated by quadrature.
pub fn ellipsoid_area(a: f64, b: f64, c: f64) -> f64 {
    assert!(a >= b && b >= c);
    if a == c {
        return 4.0 * PI * a * a;
    }
    let phi = (c / a).acos();
    let k2 = a * a * (b * b - c * c) / (b * b * (a * a - c * c));
    let f = simpson(|t| 1.0 / (1.0 - k2 * t.sin().powi(2)).sqrt(), 0.0, phi, 20000);
    let e = simpson(|t| (1.0 - k2 * t.sin().powi(2)).sqrt(), 0.0, phi, 20000);
    2.0 * PI * c * c + 2.0 * PI * a * b / phi.sin() * (e * phi.sin().powi(2) + f * phi.cos().powi(2))
}

/// Prolate spheroid (a, b, b), a > b.
pub fn prolate_area(a: f64, b: f64) -> f64 {
    let e = (1.0 - b * b / (a * a)).sqrt();
    2.0 * PI * b * b * (1.0 + a / (b * e) * e.asin())
}

/// Axisymmetric peanut r(θ) = 1 + 0.4 cos 2θ: pinched at the waist, so not convex.
pub fn peanut(nt: usize, np: usize) -> DiscretizedSurface {
    let (dt, dp) = (PI / nt as f64, 2.0 * PI / np as f64);
    let r = |t: f64| 1.0 + 0.4 * (2.0 * t).cos();
    let rp = |t: f64| -0.8 * (2.0 * t).sin();
    let mut nodes = Vec::new();
    let mut normals = Vec::new();
    let mut weights = Vec::new();
    for i in 0..nt {
        let t = (i as f64 + 0.5) * dt;
        for j in 0..np {
            let p = (j as f64 + 0.5) * dp;
            let er = Vector3::new(t.sin() * p.cos(), t.sin() * p.sin(), t.cos());
            let et = Vector3::new(t.cos() * p.cos(), t.cos() * p.sin(), -t.sin());
            let ep = Vector3::new(-p.sin(), p.cos(), 0.0);
            let xt = er * rp(t) + et * r(t);
            let xp = ep * (r(t) * t.sin());
            let n = xt.cross(&xp);
            nodes.push(er * r(t));
            normals.push(n);
            weights.push(n.norm() * dt * dp);
        }
    }
    DiscretizedSurface::from_samples(nodes, normals, weights, 0.5).expect("valid samples")
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}
