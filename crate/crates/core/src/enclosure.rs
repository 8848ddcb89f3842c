//! Voxel enclosure of the cavities from recovered lengths.
//!
//! Every ξ ∈ ∂D satisfies |p − ξ| + dist(ξ, ∂Ω) ≥ l(p, D), so points where the
//! left side falls below l can be removed. Carving works voxel by voxel: since
//! f(x) = |p − x| + dist(x, ∂Ω) is 2-Lipschitz, a voxel is carved only when
//! f(center) + 2·(half diagonal) < l − margin, which keeps the predicate sound for
//! every point of the voxel and not just its center.

use std::fmt::Write as _;

use nalgebra::Vector3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Scene;
use crate::io::fmt17;

/// Voxels per bounding-box edge at the default resolution.
pub const DEFAULT_DIVISIONS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[repr(u8)]
pub enum VoxelState {
    Outside = 0,
    Carved = 1,
    Retained = 2,
}

/// Axis-aligned lattice over the bounding box of Ω.
#[derive(Debug, Clone)]
pub struct EnclosureGrid {
    /// Center of voxel (0, 0, 0).
    pub origin: Vector3<f64>,
    /// Edge length of a cubic voxel.
    pub resolution: f64,
    pub dims: [usize; 3],
    pub state: Vec<VoxelState>,
    /// dist(center, ∂Ω) for inside voxels, NaN outside.
    dist: Vec<f64>,
}

impl EnclosureGrid {
    /// Cubic voxels of edge `resolution` covering Ω's bounding box.
    pub fn new(scene: &Scene, resolution: f64) -> Result<Self> {
        if !(resolution > 0.0 && resolution.is_finite()) {
            return Err(Error::InvalidGrid(format!("voxel resolution {resolution} must be positive")));
        }
        let (lo, hi) = scene.outer.bounding_box();
        let ext = hi - lo;
        let dims = [0, 1, 2].map(|k| ((ext[k] / resolution).ceil() as usize).max(1));
        let n = dims[0] * dims[1] * dims[2];
        if n > 50_000_000 {
            return Err(Error::InvalidGrid(format!("{n} voxels is beyond desk scale")));
        }
        let span = Vector3::new(dims[0] as f64, dims[1] as f64, dims[2] as f64) * resolution;
        let origin = lo - (span - ext) * 0.5 + Vector3::repeat(0.5 * resolution);
        let mut grid = Self { origin, resolution, dims, state: vec![VoxelState::Outside; n], dist: vec![f64::NAN; n] };
        let (state, dist): (Vec<_>, Vec<_>) = (0..n)
            .into_par_iter()
            .map(|i| match dist_to_outer(scene, &grid.center(i)) {
                Ok(d) => (VoxelState::Retained, d),
                Err(_) => (VoxelState::Outside, f64::NAN),
            })
            .unzip();
        grid.state = state;
        grid.dist = dist;
        Ok(grid)
    }

    /// Default lattice: 1/64 of the longest bounding-box edge.
    pub fn with_default_resolution(scene: &Scene) -> Result<Self> {
        Self::new(scene, default_resolution(scene))
    }

    pub fn len(&self) -> usize {
        self.state.len()
    }

    pub fn is_empty(&self) -> bool {
        self.state.is_empty()
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (k * self.dims[1] + j) * self.dims[0] + i
    }

    pub fn center(&self, idx: usize) -> Vector3<f64> {
        let i = idx % self.dims[0];
        let j = (idx / self.dims[0]) % self.dims[1];
        let k = idx / (self.dims[0] * self.dims[1]);
        self.origin + Vector3::new(i as f64, j as f64, k as f64) * self.resolution
    }

    /// Voxel containing `x`, if it is on the lattice.
    pub fn locate(&self, x: &Vector3<f64>) -> Option<usize> {
        let u = (x - self.origin) / self.resolution;
        let mut ijk = [0usize; 3];
        for a in 0..3 {
            let t = (u[a] + 0.5).floor();
            if t < 0.0 || t >= self.dims[a] as f64 {
                return None;
            }
            ijk[a] = t as usize;
        }
        Some(self.index(ijk[0], ijk[1], ijk[2]))
    }

    pub fn voxel_diameter(&self) -> f64 {
        self.resolution * 3f64.sqrt()
    }

    pub fn count(&self, s: VoxelState) -> usize {
        self.state.iter().filter(|&&v| v == s).count()
    }

    pub fn retained_volume(&self) -> f64 {
        self.count(VoxelState::Retained) as f64 * self.resolution.powi(3)
    }

    /// Legacy VTK structured points; scalars are 0 outside, 1 carved, 2 retained.
    pub fn to_vtk(&self) -> String {
        let [nx, ny, nz] = self.dims;
        let mut s = String::new();
        let _ = writeln!(s, "# vtk DataFile Version 3.0");
        let _ = writeln!(s, "enclosure grid: 0 outside, 1 carved, 2 retained");
        let _ = writeln!(s, "ASCII");
        let _ = writeln!(s, "DATASET STRUCTURED_POINTS");
        let _ = writeln!(s, "DIMENSIONS {nx} {ny} {nz}");
        let _ = writeln!(s, "ORIGIN {} {} {}", fmt17(self.origin.x), fmt17(self.origin.y), fmt17(self.origin.z));
        let h = fmt17(self.resolution);
        let _ = writeln!(s, "SPACING {h} {h} {h}");
        let _ = writeln!(s, "POINT_DATA {}", self.len());
        let _ = writeln!(s, "SCALARS state unsigned_char 1");
        let _ = writeln!(s, "LOOKUP_TABLE default");
        for row in self.state.chunks(nx) {
            let line: Vec<&str> = row.iter().map(|v| ["0", "1", "2"][*v as usize]).collect();
            let _ = writeln!(s, "{}", line.join(" "));
        }
        s
    }

    /// One row per inside voxel: center and state.
    pub fn to_csv(&self) -> String {
        let rows = (0..self.len()).filter(|&i| self.state[i] != VoxelState::Outside).map(|i| {
            let c = self.center(i);
            vec![fmt17(c.x), fmt17(c.y), fmt17(c.z), (self.state[i] as u8).to_string()]
        });
        crate::io::csv(&["x", "y", "z", "state"], rows)
    }
}

/// dist(x, ∂Ω) for x inside Ω; analytic for quadric boundaries, nearest node otherwise.
pub fn dist_to_outer(scene: &Scene, x: &Vector3<f64>) -> Result<f64> {
    let outer = &scene.outer;
    match &outer.shape {
        Some(q) => {
            if !q.contains(x) {
                return Err(Error::PointOutside([x.x, x.y, x.z]));
            }
            Ok(q.closest_point(x).1)
        }
        None => {
            let (k, d) = outer
                .nodes
                .iter()
                .enumerate()
                .map(|(k, y)| (k, (y - x).norm()))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .ok_or_else(|| Error::InvalidSurface("outer surface has no nodes".into()))?;
            if (x - outer.nodes[k]).dot(&outer.normals[k]) >= 0.0 {
                return Err(Error::PointOutside([x.x, x.y, x.z]));
            }
            Ok(d)
        }
    }
}

/// 1/64 of the longest edge of Ω's bounding box.
pub fn default_resolution(scene: &Scene) -> f64 {
    let (lo, hi) = scene.outer.bounding_box();
    (hi - lo).max() / DEFAULT_DIVISIONS as f64
}

/// max(voxel diameter, 1.5 × extraction stderr).
pub fn default_margin(grid: &EnclosureGrid, stderr: f64) -> f64 {
    grid.voxel_diameter().max(1.5 * stderr)
}

/// Carves retained voxels that lie entirely in {x : |p − x| + dist(x, ∂Ω) < l − margin}.
/// Returns the number of newly carved voxels.
pub fn carve(grid: &mut EnclosureGrid, p: &Vector3<f64>, l_hat: f64, margin: f64) -> usize {
    let slack = grid.voxel_diameter();
    let threshold = l_hat - margin;
    let centers: Vec<Vector3<f64>> = (0..grid.len()).map(|i| grid.center(i)).collect();
    let hits: Vec<usize> = (0..grid.len())
        .into_par_iter()
        .filter(|&i| {
            grid.state[i] == VoxelState::Retained && (p - centers[i]).norm() + grid.dist[i] + slack < threshold
        })
        .collect();
    for &i in &hits {
        grid.state[i] = VoxelState::Carved;
    }
    hits.len()
}

/// One probe with its length and the margin to carve with.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProbeLength {
    pub p: [f64; 3],
    pub l_hat: f64,
    pub margin: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SoundnessReport {
    pub samples: usize,
    /// True ∂D samples that fell in carved voxels.
    pub violations: usize,
    pub fraction: f64,
    /// Retained volume after each probe.
    pub volume_sequence: Vec<f64>,
    pub retained_voxels: usize,
    pub carved_voxels: usize,
}

/// Carves probe by probe, then checks the cavity nodes of `truth` against the result.
pub fn enclose(truth: &Scene, probes: &[ProbeLength], resolution: f64) -> Result<(EnclosureGrid, SoundnessReport)> {
    if probes.is_empty() {
        return Err(Error::InvalidGrid("enclosure needs at least one probe".into()));
    }
    let mut grid = EnclosureGrid::new(truth, resolution)?;
    let mut volume_sequence = Vec::with_capacity(probes.len());
    for pr in probes {
        if !(pr.l_hat.is_finite() && pr.l_hat >= 0.0) {
            return Err(Error::InvalidGrid(format!(
                "length {} for probe {:?} is not a non-negative number",
                pr.l_hat, pr.p
            )));
        }
        carve(&mut grid, &Vector3::from(pr.p), pr.l_hat, pr.margin);
        volume_sequence.push(grid.retained_volume());
    }
    let samples: Vec<&Vector3<f64>> = truth.cavities.iter().flat_map(|c| c.nodes.iter()).collect();
    let violations =
        samples.iter().filter(|x| grid.locate(x).is_some_and(|i| grid.state[i] == VoxelState::Carved)).count();
    let report = SoundnessReport {
        samples: samples.len(),
        violations,
        fraction: if samples.is_empty() { 0.0 } else { violations as f64 / samples.len() as f64 },
        volume_sequence,
        retained_voxels: grid.count(VoxelState::Retained),
        carved_voxels: grid.count(VoxelState::Carved),
    };
    Ok((grid, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn sphere_distances() {
        let scene = fixtures::concentric(1).build().unwrap();
        assert!((dist_to_outer(&scene, &Vector3::new(0.5, 0.0, 0.0)).unwrap() - 1.5).abs() < 1e-14);
        assert!((dist_to_outer(&scene, &Vector3::zeros()).unwrap() - 2.0).abs() < 1e-14);
        assert!(matches!(dist_to_outer(&scene, &Vector3::new(2.5, 0.0, 0.0)), Err(Error::PointOutside(_))));
    }

    #[test]
    fn lattice_covers_the_bounding_box() {
        let scene = fixtures::concentric(1).build().unwrap();
        let g = EnclosureGrid::new(&scene, 0.25).unwrap();
        assert_eq!(g.dims, [16, 16, 16]);
        for idx in [0, 17, g.len() - 1] {
            assert_eq!(g.locate(&g.center(idx)), Some(idx));
        }
        assert!(g.locate(&Vector3::new(5.0, 0.0, 0.0)).is_none());
        let inside = g.count(VoxelState::Retained) as f64 * 0.25f64.powi(3);
        let ball = 4.0 / 3.0 * std::f64::consts::PI * 8.0;
        assert!((inside - ball).abs() < 0.1 * ball);
    }

    #[test]
    fn limits_of_the_carving_predicate() {
        let scene = fixtures::concentric(1).build().unwrap();
        let p = Vector3::new(3.0, 0.0, 0.0);
        let mut g = EnclosureGrid::new(&scene, 0.2).unwrap();
        assert_eq!(carve(&mut g, &p, 0.0, 0.0), 0);
        let inside = g.count(VoxelState::Retained);
        carve(&mut g, &p, 100.0, 0.0);
        assert_eq!(g.count(VoxelState::Retained), 0);
        assert_eq!(g.count(VoxelState::Carved), inside);
    }
}
