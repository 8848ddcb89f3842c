use std::path::Path;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::surface::{make_surface, DiscretizedSurface, SurfaceKind, SurfaceSpec};
use crate::error::{Error, Result};
use crate::forward::flux::{FluxKind, FluxModel};

/// Outer boundary, cavities, Robin coefficients and flux model.
///
/// The region between Ω and the cavities is connected whenever the cavities are
/// disjoint convex bodies inside Ω, which is what construction enforces.
#[derive(Debug, Clone)]
pub struct Scene {
    pub outer: DiscretizedSurface,
    pub cavities: Vec<DiscretizedSurface>,
    /// Robin coefficient per cavity (1/length).
    pub rho: Vec<f64>,
    pub flux: FluxModel,
}

impl Scene {
    pub fn new(
        outer: DiscretizedSurface,
        cavities: Vec<DiscretizedSurface>,
        rho: Vec<f64>,
        flux: FluxModel,
    ) -> Result<Self> {
        if rho.len() != cavities.len() {
            return Err(Error::InvalidScene(format!(
                "{} cavities but {} Robin coefficients",
                cavities.len(),
                rho.len()
            )));
        }
        if rho.iter().any(|r| !r.is_finite()) {
            return Err(Error::InvalidScene("Robin coefficients must be finite".into()));
        }
        let outer = outer.with_id(0);
        let cavities: Vec<_> = cavities.into_iter().enumerate().map(|(j, c)| c.with_id(j + 1)).collect();
        let shape = outer
            .shape
            .as_ref()
            .ok_or_else(|| Error::InvalidScene("outer boundary must be an analytic surface".into()))?;
        for (j, c) in cavities.iter().enumerate() {
            if c.shape.is_none() {
                return Err(Error::InvalidScene(format!("cavity {j} must be an analytic surface")));
            }
            if let Some(bad) = c.nodes.iter().find(|x| !shape.contains(x)) {
                return Err(Error::InvalidScene(format!(
                    "cavity {j} is not strictly inside the outer boundary (node {:?})",
                    bad.as_slice()
                )));
            }
        }
        flux.validate(&outer.nodes, &shape.center)?;
        let scene = Self { outer, cavities, rho, flux };
        cavity_separation(&scene)?;
        Ok(scene)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())?;
        SceneFile::from_toml(&text)?.build()
    }

    pub fn outer_center(&self) -> Vector3<f64> {
        self.outer.shape.as_ref().map(|q| q.center).unwrap_or_else(Vector3::zeros)
    }

    pub fn diameter(&self) -> f64 {
        self.outer.diameter()
    }

    /// Total number of cavity nodes.
    pub fn cavity_len(&self) -> usize {
        self.cavities.iter().map(|c| c.len()).sum()
    }

    /// Offsets of each cavity inside the stacked cavity node list.
    pub fn cavity_offsets(&self) -> Vec<usize> {
        let mut off = Vec::with_capacity(self.cavities.len() + 1);
        let mut acc = 0;
        off.push(0);
        for c in &self.cavities {
            acc += c.len();
            off.push(acc);
        }
        off
    }

    /// Stacked cavity nodes, normals, weights and per-node Robin coefficient.
    pub fn cavity_nodes(&self) -> StackedNodes {
        let mut s = StackedNodes::default();
        for (c, rho) in self.cavities.iter().zip(&self.rho) {
            s.nodes.extend_from_slice(&c.nodes);
            s.normals.extend_from_slice(&c.normals);
            s.weights.extend_from_slice(&c.weights);
            s.rho.extend(std::iter::repeat(*rho).take(c.len()));
        }
        s
    }

    /// The same scene without its cavities.
    pub fn without_cavities(&self) -> Self {
        Self { outer: self.outer.clone(), cavities: Vec::new(), rho: Vec::new(), flux: self.flux.clone() }
    }

    /// Checks that a probe lies strictly outside Ω̄.
    pub fn check_probe(&self, p: &Vector3<f64>) -> Result<()> {
        let shape = self.outer.shape.as_ref().expect("scene outer boundary is analytic");
        if shape.implicit(p) <= 0.0 || shape.signed_distance(p) <= 0.0 {
            return Err(Error::ProbeInside([p.x, p.y, p.z]));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default)]
pub struct StackedNodes {
    pub nodes: Vec<Vector3<f64>>,
    pub normals: Vec<Vector3<f64>>,
    pub weights: Vec<f64>,
    pub rho: Vec<f64>,
}

/// Half the smallest distance between two cavity surfaces, d₁. Returns +∞ for a
/// single cavity.
pub fn cavity_separation(scene: &Scene) -> Result<f64> {
    let n = scene.cavities.len();
    let mut best = f64::INFINITY;
    for i in 0..n {
        for j in i + 1..n {
            best =
                best.min(surface_distance(&scene.cavities[i], &scene.cavities[j]).map_err(|_| Error::Overlap(i, j))?);
        }
    }
    Ok(0.5 * best)
}

/// Distance between two disjoint convex analytic surfaces: node brute force,
/// then alternating projections from the best node pair.
pub fn surface_distance(a: &DiscretizedSurface, b: &DiscretizedSurface) -> Result<f64> {
    let qa = a.shape.as_ref().ok_or_else(|| Error::InvalidSurface("no analytic shape".into()))?;
    let qb = b.shape.as_ref().ok_or_else(|| Error::InvalidSurface("no analytic shape".into()))?;
    if a.nodes.iter().any(|x| qb.implicit(x) <= 0.0) || b.nodes.iter().any(|x| qa.implicit(x) <= 0.0) {
        return Err(Error::InvalidScene("surfaces intersect".into()));
    }
    if qa.contains(&qb.center) || qb.contains(&qa.center) {
        return Err(Error::InvalidScene("one body contains the other".into()));
    }
    let mut best = (f64::INFINITY, 0, 0);
    for (i, x) in a.nodes.iter().enumerate() {
        for (j, y) in b.nodes.iter().enumerate() {
            let d = (x - y).norm_squared();
            if d < best.0 {
                best = (d, i, j);
            }
        }
    }
    let mut x = a.nodes[best.1];
    let mut y = b.nodes[best.2];
    let mut d = best.0.sqrt();
    for _ in 0..10_000 {
        let (x1, _) = qa.closest_point(&y);
        let (y1, _) = qb.closest_point(&x1);
        let d1 = (x1 - y1).norm();
        if qb.implicit(&x1) <= 0.0 || qa.implicit(&y1) <= 0.0 || d1 <= 1e-14 * a.diameter() {
            return Err(Error::InvalidScene("surfaces intersect".into()));
        }
        let done = (d - d1).abs() <= 1e-15 * d && (x1 - x).norm() <= 1e-13 * a.diameter();
        x = x1;
        y = y1;
        d = d1;
        if done {
            break;
        }
    }
    Ok(d)
}

/// One surface entry of a scene file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CavityEntry {
    pub kind: SurfaceKind,
    pub center: [f64; 3],
    pub radii: [f64; 3],
    pub refinement: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rotation: Option<[[f64; 3]; 3]>,
    #[serde(default)]
    pub rho: f64,
}

impl CavityEntry {
    pub fn spec(&self) -> SurfaceSpec {
        SurfaceSpec {
            kind: self.kind,
            center: self.center,
            radii: self.radii,
            refinement: self.refinement,
            rotation: self.rotation,
        }
    }

    pub fn from_spec(spec: &SurfaceSpec, rho: f64) -> Self {
        Self {
            kind: spec.kind,
            center: spec.center,
            radii: spec.radii,
            refinement: spec.refinement,
            rotation: spec.rotation,
            rho,
        }
    }
}

/// Flux block of a scene file. `slope` and `modulation` apply to `c1_profile` only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluxEntry {
    pub kind: FluxTag,
    pub value: f64,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub slope: f64,
    #[serde(default, skip_serializing_if = "is_zero3")]
    pub modulation: [f64; 3],
    #[serde(default = "default_beta0")]
    pub beta0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FluxTag {
    Constant,
    C1Profile,
}

fn is_zero(x: &f64) -> bool {
    *x == 0.0
}

fn is_zero3(x: &[f64; 3]) -> bool {
    x.iter().all(|v| *v == 0.0)
}

impl FluxEntry {
    pub fn flux_kind(&self) -> FluxKind {
        match self.kind {
            FluxTag::Constant => FluxKind::Constant { value: self.value },
            FluxTag::C1Profile => {
                FluxKind::C1Profile { value: self.value, slope: self.slope, modulation: self.modulation }
            }
        }
    }

    pub fn from_model(model: &FluxModel) -> Self {
        match model.kind {
            FluxKind::Constant { value } => {
                Self { kind: FluxTag::Constant, value, slope: 0.0, modulation: [0.0; 3], beta0: model.beta0 }
            }
            FluxKind::C1Profile { value, slope, modulation } => {
                Self { kind: FluxTag::C1Profile, value, slope, modulation, beta0: model.beta0 }
            }
        }
    }
}

fn default_beta0() -> f64 {
    2.0
}

fn default_horizon() -> f64 {
    1.0
}

fn default_flux() -> FluxEntry {
    FluxEntry { kind: FluxTag::Constant, value: 1.0, slope: 0.0, modulation: [0.0; 3], beta0: 2.0 }
}

/// Structured-text scene description (TOML); see docs/schema.md.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneFile {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default = "default_flux")]
    pub flux: FluxEntry,
    pub outer: SurfaceSpec,
    #[serde(default)]
    pub cavities: Vec<CavityEntry>,
    /// Suggested probes for this scene.
    #[serde(default)]
    pub probes: Vec<[f64; 3]>,
}

impl SceneFile {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scene files always serialize")
    }

    pub fn flux_model(&self) -> FluxModel {
        FluxModel { kind: self.flux.flux_kind(), horizon: self.horizon, beta0: self.flux.beta0 }
    }

    pub fn build(&self) -> Result<Scene> {
        let outer = make_surface(&self.outer)?;
        let cavities = self.cavities.iter().map(|c| make_surface(&c.spec())).collect::<Result<Vec<_>>>()?;
        let rho = self.cavities.iter().map(|c| c.rho).collect();
        Scene::new(outer, cavities, rho, self.flux_model())
    }

    /// Same scene with every surface at the given refinement.
    pub fn with_refinement(&self, r: usize) -> Self {
        let mut s = self.clone();
        s.outer.refinement = r;
        for c in &mut s.cavities {
            c.refinement = r;
        }
        s
    }

    pub fn probes(&self) -> Vec<Vector3<f64>> {
        self.probes.iter().map(|p| Vector3::from(*p)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::surface::make_sphere;

    fn two_spheres(c: f64, r: f64) -> Result<Scene> {
        let outer = make_sphere(&SurfaceSpec::sphere([0.0; 3], 3.5, 2))?;
        let a = make_sphere(&SurfaceSpec::sphere([-c, 0.0, 0.0], r, 2))?;
        let b = make_sphere(&SurfaceSpec::sphere([c, 0.0, 0.0], r, 2))?;
        Scene::new(outer, vec![a, b], vec![0.0, 0.0], FluxModel::default())
    }

    #[test]
    fn separation_of_unit_spheres() {
        let s = two_spheres(2.0, 1.0).unwrap();
        assert!((cavity_separation(&s).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_cavity_separation_is_infinite() {
        let outer = make_sphere(&SurfaceSpec::sphere([0.0; 3], 2.0, 1)).unwrap();
        let a = make_sphere(&SurfaceSpec::sphere([0.0; 3], 0.5, 1)).unwrap();
        let s = Scene::new(outer, vec![a], vec![0.0], FluxModel::default()).unwrap();
        assert_eq!(cavity_separation(&s).unwrap(), f64::INFINITY);
    }

    #[test]
    fn overlapping_cavities_rejected() {
        assert!(matches!(two_spheres(0.5, 1.0), Err(Error::Overlap(0, 1))));
    }

    #[test]
    fn scene_file_roundtrip_and_field_errors() {
        let text = r#"
horizon = 1.0
[flux]
kind = "constant"
value = 1.0
[outer]
kind = "sphere"
center = [0.0, 0.0, 0.0]
radii = [2.0, 2.0, 2.0]
refinement = 1
[[cavities]]
kind = "sphere"
center = [0.0, 0.0, 0.0]
radii = [0.5, 0.5, 0.5]
refinement = 1
rho = 0.25
"#;
        let f = SceneFile::from_toml(text).unwrap();
        assert_eq!(f.cavities[0].rho, 0.25);
        assert_eq!(SceneFile::from_toml(&f.to_toml()).unwrap(), f);
        let bad = text.replace("radii = [0.5, 0.5, 0.5]", "radius = 0.5");
        let msg = SceneFile::from_toml(&bad).unwrap_err().to_string();
        assert!(msg.contains("radius") || msg.contains("radii"), "{msg}");
    }
}
