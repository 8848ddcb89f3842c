//! Local graph charts ξ + σ₁e₁ + σ₂e₂ − g(σ)ν over the tangent plane, and the
//! strict-convexity audit built on them.

use nalgebra::{Matrix2, Vector2, Vector3};
use serde::Serialize;

use super::quadric::Quadric;
use super::surface::DiscretizedSurface;
use crate::error::{Error, Result};

/// Deterministic orthonormal tangent frame (e₁, e₂) with e₁ × e₂ = ν.
pub fn tangent_frame(nu: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let k = nu.iamin();
    let mut axis = Vector3::zeros();
    axis[k] = 1.0;
    let e1 = axis.cross(nu).normalize();
    let e2 = nu.cross(&e1);
    (e1, e2)
}

#[derive(Debug, Clone)]
pub struct LocalChart {
    pub base: Vector3<f64>,
    pub normal: Vector3<f64>,
    pub e1: Vector3<f64>,
    pub e2: Vector3<f64>,
    pub r0: f64,
    /// Finite-difference step for derivatives of g.
    pub fd_step: f64,
    shape: Quadric,
}

impl LocalChart {
    /// Chart of a quadric at an arbitrary surface point.
    pub fn at_point(shape: &Quadric, x: &Vector3<f64>, r0: f64) -> Self {
        let q = shape.form();
        let normal = (q * (x - shape.center)).normalize();
        let (e1, e2) = tangent_frame(&normal);
        Self { base: *x, normal, e1, e2, r0, fd_step: 1e-4 * shape.min_curvature_radius(), shape: shape.clone() }
    }

    pub fn frame(&self) -> [Vector3<f64>; 2] {
        [self.e1, self.e2]
    }

    /// Graph height g(σ) ≥ 0 below the tangent plane, or `None` if the normal
    /// line through the tangent-plane point misses the surface.
    pub fn g(&self, s: &Vector2<f64>) -> Option<f64> {
        let q = self.shape.form();
        let p = self.base + self.e1 * s.x + self.e2 * s.y - self.shape.center;
        let a = (self.normal.transpose() * q * self.normal)[0];
        let b = (self.normal.transpose() * q * p)[0];
        let c0 = (p.transpose() * q * p)[0] - 1.0;
        let disc = b * b - a * c0;
        if disc < 0.0 || b <= 0.0 {
            return None;
        }
        // Smaller root of a t² − 2b t + c₀ = 0, written without cancellation.
        Some(c0 / (b + disc.sqrt()))
    }

    pub fn point(&self, s: &Vector2<f64>) -> Option<Vector3<f64>> {
        self.g(s).map(|g| self.base + self.e1 * s.x + self.e2 * s.y - self.normal * g)
    }

    /// Outward normal at the chart point σ.
    pub fn normal_at(&self, s: &Vector2<f64>) -> Option<Vector3<f64>> {
        let x = self.point(s)?;
        Some((self.shape.form() * (x - self.shape.center)).normalize())
    }

    pub fn gradient_fd(&self, s: &Vector2<f64>) -> Option<Vector2<f64>> {
        let h = self.fd_step;
        let dx = Vector2::new(h, 0.0);
        let dy = Vector2::new(0.0, h);
        Some(Vector2::new(
            (self.g(&(s + dx))? - self.g(&(s - dx))?) / (2.0 * h),
            (self.g(&(s + dy))? - self.g(&(s - dy))?) / (2.0 * h),
        ))
    }

    pub fn hessian_fd(&self, s: &Vector2<f64>) -> Option<Matrix2<f64>> {
        let h = self.fd_step;
        let g0 = self.g(s)?;
        let e = [Vector2::new(h, 0.0), Vector2::new(0.0, h)];
        let mut m = Matrix2::zeros();
        for i in 0..2 {
            m[(i, i)] = (self.g(&(s + e[i]))? - 2.0 * g0 + self.g(&(s - e[i]))?) / (h * h);
        }
        let off = (self.g(&(s + e[0] + e[1]))? - self.g(&(s + e[0] - e[1]))? - self.g(&(s - e[0] + e[1]))?
            + self.g(&(s - e[0] - e[1]))?)
            / (4.0 * h * h);
        m[(0, 1)] = off;
        m[(1, 0)] = off;
        Some(m)
    }

    /// Hessian of g at σ = 0, i.e. the second fundamental form in the frame.
    pub fn hessian_at_base(&self) -> Matrix2<f64> {
        let f = self.frame();
        Matrix2::from_fn(|i, j| self.shape.second_form(&self.base, &f[i], &f[j]))
    }
}

/// Chart of a discretized surface at one of its nodes.
pub fn local_chart(surface: &DiscretizedSurface, node: usize) -> Result<LocalChart> {
    if node >= surface.len() {
        return Err(Error::InvalidSurface(format!("node {node} out of range ({})", surface.len())));
    }
    let shape =
        surface.shape.as_ref().ok_or_else(|| Error::InvalidSurface("sampled surface has no analytic chart".into()))?;
    let x = &surface.nodes[node];
    let nn = surface
        .nodes
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != node)
        .map(|(_, y)| (x - y).norm())
        .fold(f64::INFINITY, f64::min);
    if nn > surface.r0 {
        return Err(Error::ChartTooCoarse { r0: surface.r0, spacing: nn });
    }
    Ok(LocalChart::at_point(shape, x, surface.r0))
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ConvexityReport {
    pub m0: f64,
    pub m1: f64,
    pub r0: f64,
}

/// Strict-convexity constants from chord ratios −ν_ξ·(ζ−ξ)/|ζ−ξ|² over node
/// pairs closer than 2r₀. For a graph point these ratios equal g/(|σ|² + g²), so
/// the extremes M₀, M₁ satisfy M₀|σ|² ≤ g(σ) ≤ 2M₁|σ|² wherever g ≤ |σ|. On
/// surfaces with a chart the sandwich is also checked directly on chart samples.
pub fn convexity_audit(surface: &DiscretizedSurface) -> Result<ConvexityReport> {
    let reach = 2.0 * surface.r0;
    let mut m0 = f64::INFINITY;
    let mut m1 = f64::NEG_INFINITY;
    let mut worst = 0usize;
    for (i, (x, nu)) in surface.nodes.iter().zip(&surface.normals).enumerate() {
        for (j, y) in surface.nodes.iter().enumerate() {
            if i == j {
                continue;
            }
            let d = y - x;
            let r2 = d.norm_squared();
            if r2 >= reach * reach {
                continue;
            }
            let c = -nu.dot(&d) / r2;
            if c < m0 {
                m0 = c;
                worst = i;
            }
            m1 = m1.max(c);
        }
    }
    if !m0.is_finite() {
        return Err(Error::ChartTooCoarse { r0: surface.r0, spacing: surface.spacing });
    }
    if m0 <= 0.0 {
        return Err(Error::NotStrictlyConvex(format!(
            "chord ratio {m0:.3e} at node {worst} ({:?})",
            surface.nodes[worst].as_slice()
        )));
    }
    if let Some(shape) = &surface.shape {
        let stride = (surface.len() / 64).max(1);
        for i in (0..surface.len()).step_by(stride) {
            let chart = LocalChart::at_point(shape, &surface.nodes[i], surface.r0);
            for frac in [0.25, 0.5, 1.0] {
                for k in 0..8 {
                    let a = std::f64::consts::PI * k as f64 / 4.0;
                    let s = Vector2::new(a.cos(), a.sin()) * (frac * surface.r0);
                    let Some(g) = chart.g(&s) else { continue };
                    let s2 = s.norm_squared();
                    // The pair scan sees only node pairs; allow for the gap to the continuum.
                    let slack = 1e-2;
                    if g < (1.0 - slack) * m0 * s2 || g > (1.0 + slack) * 2.0 * m1 * s2 {
                        return Err(Error::NotStrictlyConvex(format!(
                            "chart sandwich fails at node {i}: g = {g:.4e}, |σ|² = {s2:.4e}, M0 = {m0:.4e}, M1 = {m1:.4e}"
                        )));
                    }
                }
            }
        }
    }
    Ok(ConvexityReport { m0, m1, r0: surface.r0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::surface::{make_ellipsoid, make_sphere, SurfaceSpec};

    #[test]
    fn sphere_chart_closed_form() {
        let s = make_sphere(&SurfaceSpec::sphere([0.0; 3], 1.0, 3)).unwrap();
        for node in [0, 100, 777] {
            let c = local_chart(&s, node).unwrap();
            assert!(c.g(&Vector2::zeros()).unwrap().abs() < 1e-15);
            assert!(c.gradient_fd(&Vector2::zeros()).unwrap().norm() < 1e-10);
            let g = c.g(&Vector2::new(0.06, 0.08)).unwrap();
            assert!((g - (1.0 - (1.0f64 - 0.01).sqrt())).abs() < 1e-13);
        }
    }

    #[test]
    fn chart_points_lie_on_surface_and_reproduce_nodes() {
        let s = make_ellipsoid(&SurfaceSpec::ellipsoid([0.2, 0.0, 0.1], [1.5, 1.0, 0.8], 3)).unwrap();
        let shape = s.shape.clone().unwrap();
        let c = local_chart(&s, 500).unwrap();
        for (j, y) in s.nodes.iter().enumerate() {
            let d = y - c.base;
            if d.norm() > c.r0 || j == 500 {
                continue;
            }
            let sig = Vector2::new(d.dot(&c.e1), d.dot(&c.e2));
            let p = c.point(&sig).unwrap();
            assert!((p - y).norm() < 1e-10, "node {j}");
            assert!(shape.implicit(&p).abs() < 1e-12);
        }
    }

    #[test]
    fn sphere_convexity_constants() {
        let s = make_sphere(&SurfaceSpec::sphere([1.0, 2.0, 3.0], 1.0, 3)).unwrap();
        let r = convexity_audit(&s).unwrap();
        assert!((r.m0 - 0.5).abs() < 0.025 && (r.m1 - 0.5).abs() < 0.025, "{r:?}");
    }

    #[test]
    fn too_coarse_surface_rejects_chart() {
        let s = make_ellipsoid(&SurfaceSpec::ellipsoid([0.0; 3], [6.0, 1.0, 1.0], 1)).unwrap();
        // An equatorial node, where the spacing is widest against r₀ = 1/18.
        let (nt, np) = s.grid;
        assert!(matches!(local_chart(&s, (nt / 2) * np), Err(Error::ChartTooCoarse { .. })));
    }
}
