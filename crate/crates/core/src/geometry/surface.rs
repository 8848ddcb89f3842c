use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::quadric::Quadric;
use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SurfaceKind {
    Sphere,
    Ellipsoid,
}

/// Description of a parametric surface. For spheres only `radii[0]` is read.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceSpec {
    pub kind: SurfaceKind,
    pub center: [f64; 3],
    pub radii: [f64; 3],
    pub refinement: usize,
    /// Orthogonal matrix (rows) applied about the center; identity when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rotation: Option<[[f64; 3]; 3]>,
}

impl SurfaceSpec {
    pub fn sphere(center: [f64; 3], radius: f64, refinement: usize) -> Self {
        Self { kind: SurfaceKind::Sphere, center, radii: [radius; 3], refinement, rotation: None }
    }

    pub fn ellipsoid(center: [f64; 3], radii: [f64; 3], refinement: usize) -> Self {
        Self { kind: SurfaceKind::Ellipsoid, center, radii, refinement, rotation: None }
    }

    pub fn with_refinement(&self, refinement: usize) -> Self {
        Self { refinement, ..self.clone() }
    }

    /// Applies x ↦ Qx + t to the described surface.
    pub fn transformed(&self, q: &Matrix3<f64>, t: &Vector3<f64>) -> Self {
        let c = q * Vector3::from(self.center) + t;
        let r = q * self.rotation_matrix();
        Self {
            center: [c.x, c.y, c.z],
            rotation: Some(std::array::from_fn(|i| std::array::from_fn(|j| r[(i, j)]))),
            ..self.clone()
        }
    }

    /// Scales the surface about the origin.
    pub fn scaled(&self, s: f64) -> Self {
        Self { center: self.center.map(|c| c * s), radii: self.radii.map(|r| r * s), ..self.clone() }
    }

    pub fn rotation_matrix(&self) -> Matrix3<f64> {
        match &self.rotation {
            Some(r) => Matrix3::from_fn(|i, j| r[i][j]),
            None => Matrix3::identity(),
        }
    }

    pub fn quadric(&self) -> Result<Quadric> {
        let radii = match self.kind {
            SurfaceKind::Sphere => Vector3::repeat(self.radii[0]),
            SurfaceKind::Ellipsoid => Vector3::from(self.radii),
        };
        if radii.iter().any(|r| !(*r > 0.0) || !r.is_finite()) {
            return Err(Error::InvalidSurface(format!("radii must be positive, got {:?}", self.radii)));
        }
        if self.center.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidSurface("center must be finite".into()));
        }
        if self.refinement < 1 {
            return Err(Error::InvalidSurface("refinement must be at least 1".into()));
        }
        let rot = self.rotation_matrix();
        let orth = (rot.transpose() * rot - Matrix3::identity()).abs().max();
        if orth > 1e-10 || rot.determinant() < 0.0 {
            return Err(Error::InvalidSurface("rotation must be a proper orthogonal matrix".into()));
        }
        Ok(Quadric::new(Vector3::from(self.center), rot, radii))
    }
}

/// Grid size for a refinement level: n_θ Gauss–Legendre points in cos θ and
/// n_φ = 2n_θ trapezoid points in φ.
pub fn grid_size(refinement: usize) -> (usize, usize) {
    let nt = 4 + 8 * refinement;
    (nt, 2 * nt)
}

/// A closed surface sampled by quadrature nodes.
///
/// Node `i = it·n_φ + ip` sits at cos θ = t_it, φ = 2π(ip + ½)/n_φ of the
/// reference sphere, mapped through the analytic shape when there is one.
#[derive(Debug, Clone)]
pub struct DiscretizedSurface {
    pub id: usize,
    pub nodes: Vec<Vector3<f64>>,
    pub normals: Vec<Vector3<f64>>,
    pub weights: Vec<f64>,
    /// Reference-sphere preimages of the nodes (empty for sampled surfaces).
    pub preimages: Vec<Vector3<f64>>,
    pub shape: Option<Quadric>,
    pub grid: (usize, usize),
    /// Chart radius r₀.
    pub r0: f64,
    /// Largest nearest-neighbour distance between nodes.
    pub spacing: f64,
    pub spec: Option<SurfaceSpec>,
}

pub fn make_sphere(spec: &SurfaceSpec) -> Result<DiscretizedSurface> {
    if spec.kind != SurfaceKind::Sphere {
        return Err(Error::InvalidSurface("make_sphere needs kind = sphere".into()));
    }
    let q = spec.quadric()?;
    Ok(discretize(q, spec))
}

pub fn make_ellipsoid(spec: &SurfaceSpec) -> Result<DiscretizedSurface> {
    if spec.kind != SurfaceKind::Ellipsoid {
        return Err(Error::InvalidSurface("make_ellipsoid needs kind = ellipsoid".into()));
    }
    let q = spec.quadric()?;
    Ok(discretize(q, spec))
}

pub fn make_surface(spec: &SurfaceSpec) -> Result<DiscretizedSurface> {
    match spec.kind {
        SurfaceKind::Sphere => make_sphere(spec),
        SurfaceKind::Ellipsoid => make_ellipsoid(spec),
    }
}

fn discretize(q: Quadric, spec: &SurfaceSpec) -> DiscretizedSurface {
    let (nt, np) = grid_size(spec.refinement);
    let (t, wt) = gauss_legendre(nt);
    let dphi = 2.0 * std::f64::consts::PI / np as f64;
    let n = nt * np;
    let mut nodes = Vec::with_capacity(n);
    let mut normals = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    let mut preimages = Vec::with_capacity(n);
    for (ti, wi) in t.iter().zip(&wt) {
        let s = (1.0 - ti * ti).sqrt();
        for k in 0..np {
            let phi = dphi * (k as f64 + 0.5);
            let u = Vector3::new(s * phi.cos(), s * phi.sin(), *ti);
            nodes.push(q.point(&u));
            normals.push(q.normal(&u));
            weights.push(q.area_factor(&u) * wi * dphi);
            preimages.push(u);
        }
    }
    let spacing = max_nearest_neighbour(&nodes);
    DiscretizedSurface {
        id: 0,
        nodes,
        normals,
        weights,
        preimages,
        r0: 0.3 * q.min_curvature_radius(),
        shape: Some(q),
        grid: (nt, np),
        spacing,
        spec: Some(spec.clone()),
    }
}

fn max_nearest_neighbour(nodes: &[Vector3<f64>]) -> f64 {
    nearest_neighbour_distances(nodes).into_iter().fold(0.0, f64::max)
}

pub(crate) fn nearest_neighbour_distances(nodes: &[Vector3<f64>]) -> Vec<f64> {
    nodes
        .iter()
        .enumerate()
        .map(|(i, x)| {
            nodes
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, y)| (x - y).norm_squared())
                .fold(f64::INFINITY, f64::min)
                .sqrt()
        })
        .collect()
}

impl DiscretizedSurface {
    /// A surface given by raw samples with no analytic shape behind it. Such
    /// surfaces support audits over node pairs but no charts or singular moments.
    pub fn from_samples(
        nodes: Vec<Vector3<f64>>,
        normals: Vec<Vector3<f64>>,
        weights: Vec<f64>,
        r0: f64,
    ) -> Result<Self> {
        if nodes.len() != normals.len() || nodes.len() != weights.len() || nodes.is_empty() {
            return Err(Error::InvalidSurface("sample arrays must be non-empty and of equal length".into()));
        }
        if weights.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::InvalidSurface("weights must be positive".into()));
        }
        let normals: Vec<_> = normals.into_iter().map(|n| n.normalize()).collect();
        let spacing = max_nearest_neighbour(&nodes);
        Ok(Self {
            id: 0,
            nodes,
            normals,
            weights,
            preimages: Vec::new(),
            shape: None,
            grid: (0, 0),
            r0,
            spacing,
            spec: None,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn area(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn with_id(mut self, id: usize) -> Self {
        self.id = id;
        self
    }

    /// Axis-aligned bounding box of the analytic shape (or of the nodes).
    pub fn bounding_box(&self) -> (Vector3<f64>, Vector3<f64>) {
        match &self.shape {
            Some(q) => {
                // Support function of an ellipsoid along each axis: |R·D·e_k row|.
                let m = q.rotation * Matrix3::from_diagonal(&q.radii);
                let ext = Vector3::from_fn(|k, _| m.row(k).norm());
                (q.center - ext, q.center + ext)
            }
            None => {
                let mut lo = Vector3::repeat(f64::INFINITY);
                let mut hi = Vector3::repeat(f64::NEG_INFINITY);
                for x in &self.nodes {
                    lo = lo.inf(x);
                    hi = hi.sup(x);
                }
                (lo, hi)
            }
        }
    }

    pub fn diameter(&self) -> f64 {
        let (lo, hi) = self.bounding_box();
        (hi - lo).norm()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn unit_sphere_area_and_radius() {
        let s = make_sphere(&SurfaceSpec::sphere([0.0; 3], 1.0, 3)).unwrap();
        assert!((s.area() - 4.0 * PI).abs() < 1e-3 * 4.0 * PI);
        for (x, n) in s.nodes.iter().zip(&s.normals) {
            assert!((x.norm() - 1.0).abs() < 1e-12);
            assert!((n.norm() - 1.0).abs() < 1e-12);
            assert!((n - x).norm() < 1e-12);
        }
    }

    #[test]
    fn zero_radius_is_rejected() {
        assert!(make_sphere(&SurfaceSpec::sphere([0.0; 3], 0.0, 3)).is_err());
        assert!(make_ellipsoid(&SurfaceSpec::ellipsoid([0.0; 3], [1.0, 1.0, 0.0], 3)).is_err());
        assert!(make_sphere(&SurfaceSpec::sphere([0.0; 3], 1.0, 0)).is_err());
    }

    #[test]
    fn degenerate_ellipsoid_matches_sphere() {
        let a = make_sphere(&SurfaceSpec::sphere([0.3, 0.0, -1.0], 1.0, 2)).unwrap();
        let b = make_ellipsoid(&SurfaceSpec::ellipsoid([0.3, 0.0, -1.0], [1.0; 3], 2)).unwrap();
        for i in 0..a.len() {
            assert!((a.nodes[i] - b.nodes[i]).norm() < 1e-15);
            assert!((a.normals[i] - b.normals[i]).norm() < 1e-15);
            assert!((a.weights[i] - b.weights[i]).abs() < 1e-15);
        }
    }

    #[test]
    fn sphere_quadrature_is_exact_for_low_degree_harmonics() {
        let s = make_sphere(&SurfaceSpec::sphere([0.0; 3], 1.0, 1)).unwrap();
        let q: f64 = s.nodes.iter().zip(&s.weights).map(|(x, w)| w * x.z * x.z * x.x * x.x).sum();
        // ∫ x²z² dS over the unit sphere = 4π/15
        assert!((q - 4.0 * PI / 15.0).abs() < 1e-13);
        let q1: f64 = s.nodes.iter().zip(&s.weights).map(|(x, w)| w * x.x * x.y.powi(3)).sum();
        assert!(q1.abs() < 1e-13);
    }
}
