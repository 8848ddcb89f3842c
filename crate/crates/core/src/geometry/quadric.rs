//! Analytic ellipsoid x = c + R·diag(a)·u, |u| = 1.

use nalgebra::{Matrix3, Vector3};

/// An ellipsoid given by center, rotation and semi-axes. A sphere is the case
/// of three equal radii.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadric {
    pub center: Vector3<f64>,
    pub rotation: Matrix3<f64>,
    pub radii: Vector3<f64>,
}

impl Quadric {
    pub fn new(center: Vector3<f64>, rotation: Matrix3<f64>, radii: Vector3<f64>) -> Self {
        Self { center, rotation, radii }
    }

    pub fn is_sphere(&self) -> bool {
        let r = self.radii;
        (r.x - r.y).abs() <= 1e-14 * r.x && (r.x - r.z).abs() <= 1e-14 * r.x
    }

    /// Surface point for a unit vector `u` of the reference sphere.
    pub fn point(&self, u: &Vector3<f64>) -> Vector3<f64> {
        self.center + self.rotation * u.component_mul(&self.radii)
    }

    /// Outward unit normal at the image of `u`.
    pub fn normal(&self, u: &Vector3<f64>) -> Vector3<f64> {
        (self.rotation * u.component_div(&self.radii)).normalize()
    }

    /// Area element: dS = area_factor(u)·dS_unit.
    pub fn area_factor(&self, u: &Vector3<f64>) -> f64 {
        let r = self.radii;
        r.x * r.y * r.z * u.component_div(&r).norm()
    }

    /// Reference-sphere coordinates of a point, D⁻¹Rᵀ(x − c). Unit length on the surface.
    pub fn local(&self, x: &Vector3<f64>) -> Vector3<f64> {
        (self.rotation.transpose() * (x - self.center)).component_div(&self.radii)
    }

    /// Implicit function F(x) = |D⁻¹Rᵀ(x−c)|² − 1; negative inside.
    pub fn implicit(&self, x: &Vector3<f64>) -> f64 {
        self.local(x).norm_squared() - 1.0
    }

    pub fn contains(&self, x: &Vector3<f64>) -> bool {
        self.implicit(x) < 0.0
    }

    /// The symmetric matrix Q with F(x) = (x−c)ᵀQ(x−c) − 1.
    pub fn form(&self) -> Matrix3<f64> {
        let d = Matrix3::from_diagonal(&self.radii.map(|a| 1.0 / (a * a)));
        self.rotation * d * self.rotation.transpose()
    }

    /// Second fundamental form II(e, f) at a surface point x (positive for convex).
    pub fn second_form(&self, x: &Vector3<f64>, e: &Vector3<f64>, f: &Vector3<f64>) -> f64 {
        let q = self.form();
        (e.transpose() * q * f)[0] / (q * (x - self.center)).norm()
    }

    /// Smallest principal radius of curvature over the whole surface, c²/a for a ≥ b ≥ c.
    pub fn min_curvature_radius(&self) -> f64 {
        let r = self.radii;
        let amax = r.x.max(r.y).max(r.z);
        let amin = r.x.min(r.y).min(r.z);
        amin * amin / amax
    }

    /// Largest principal radius of curvature over the whole surface, a²/c.
    pub fn max_curvature_radius(&self) -> f64 {
        let r = self.radii;
        let amax = r.x.max(r.y).max(r.z);
        let amin = r.x.min(r.y).min(r.z);
        amax * amax / amin
    }

    pub fn max_radius(&self) -> f64 {
        self.radii.max()
    }

    /// Closest surface point to `q` and its distance.
    pub fn closest_point(&self, q: &Vector3<f64>) -> (Vector3<f64>, f64) {
        if self.is_sphere() {
            let d = q - self.center;
            let n = d.norm();
            let a = self.radii.x;
            let dir = if n > 0.0 { d / n } else { self.rotation.column(0).into_owned() };
            let x = self.center + dir * a;
            return (x, (n - a).abs());
        }
        let y = self.rotation.transpose() * (q - self.center);
        let a = self.radii;
        let ay = y.abs();
        let x_abs = closest_abs(&a, &ay);
        let xl = Vector3::new(x_abs.x.copysign(y.x), x_abs.y.copysign(y.y), x_abs.z.copysign(y.z));
        let x = self.center + self.rotation * xl;
        (x, (x - q).norm())
    }

    /// Signed distance: negative inside.
    pub fn signed_distance(&self, q: &Vector3<f64>) -> f64 {
        let (_, d) = self.closest_point(q);
        if self.contains(q) {
            -d
        } else {
            d
        }
    }
}

/// Closest point on the axis-aligned ellipsoid with semi-axes `a` to a point with
/// non-negative coordinates `y`. The minimizer is x_k = a_k² y_k / (a_k² + t) for
/// the root t of Σ (a_k y_k / (a_k² + t))² = 1 on (−a_min², ∞).
fn closest_abs(a: &Vector3<f64>, y: &Vector3<f64>) -> Vector3<f64> {
    let f = |t: f64| -> f64 { (0..3).map(|k| (a[k] * y[k] / (a[k] * a[k] + t)).powi(2)).sum::<f64>() - 1.0 };
    let amin = a.min();
    let amin2 = amin * amin;
    let scale = a.max();
    let on_min: Vec<usize> = (0..3).filter(|&k| (a[k] - amin).abs() <= 1e-14 * scale).collect();
    let f0 = f(0.0);
    if f0 == 0.0 {
        return *y;
    }
    let (lo, hi) = if f0 > 0.0 {
        (0.0, scale * y.norm() + scale * scale)
    } else {
        let weight_on_min: f64 = on_min.iter().map(|&k| y[k] * y[k]).sum();
        if weight_on_min <= (1e-300_f64).max(1e-28 * scale * scale) {
            let rest: f64 =
                (0..3).filter(|k| !on_min.contains(k)).map(|k| (a[k] * y[k] / (a[k] * a[k] - amin2)).powi(2)).sum();
            if rest < 1.0 {
                let mut x = Vector3::zeros();
                for k in 0..3 {
                    if !on_min.contains(&k) {
                        x[k] = a[k] * a[k] * y[k] / (a[k] * a[k] - amin2);
                    }
                }
                x[on_min[0]] = amin * (1.0 - rest).max(0.0).sqrt();
                return x;
            }
        }
        (-amin2, 0.0)
    };
    let (mut lo, mut hi) = (lo, hi);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t = 0.5 * (lo + hi);
    Vector3::from_fn(|k, _| a[k] * a[k] * y[k] / (a[k] * a[k] + t))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_distance(qd: &Quadric, q: &Vector3<f64>) -> f64 {
        let n = 400;
        let mut best = f64::INFINITY;
        for i in 0..n {
            let th = std::f64::consts::PI * (i as f64 + 0.5) / n as f64;
            for j in 0..2 * n {
                let ph = std::f64::consts::PI * j as f64 / n as f64;
                let u = Vector3::new(th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos());
                best = best.min((qd.point(&u) - q).norm());
            }
        }
        best
    }

    #[test]
    fn closest_point_matches_dense_scan() {
        let qd = Quadric::new(Vector3::new(0.1, -0.2, 0.3), Matrix3::identity(), Vector3::new(2.0, 1.0, 0.7));
        for q in [
            Vector3::new(3.0, 0.5, 0.2),
            Vector3::new(0.2, 0.1, 0.0),
            Vector3::new(0.1, -0.2, 0.3),
            Vector3::new(-1.5, 0.3, 0.35),
        ] {
            let (x, d) = qd.closest_point(&q);
            assert!(qd.implicit(&x).abs() < 1e-12);
            let b = brute_distance(&qd, &q);
            assert!(d <= b + 1e-12 && b - d < 2e-3, "q={q:?} d={d} brute={b}");
        }
    }

    #[test]
    fn sphere_distance_is_radial() {
        let qd = Quadric::new(Vector3::zeros(), Matrix3::identity(), Vector3::repeat(2.0));
        let (_, d) = qd.closest_point(&Vector3::new(0.5, 0.0, 0.0));
        assert!((d - 1.5).abs() < 1e-15);
    }
}
