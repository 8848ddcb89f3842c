//! Nyström assembly of the layer-potential operators at one λ.
//!
//! Matrices carry the quadrature weight of the source node, A_ij = K(x_i, x_j)·w_j,
//! so applying an operator is a matrix–vector product. Self blocks are
//! corrected with exact kernel moments (see [`super::correction`]), which makes
//! every row exact on functions that are linear near the target and absorbs the
//! 1/r singularity.

use faer::Mat;
use nalgebra::Vector3;
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use super::correction::{correct_self_block, gradient_stencils, Stencil};
use super::kernels::{e_kernel, neumann_kernel, robin_parts};
use super::singular::{self_moments, SelfMoments};
use crate::error::{Error, Result};
use crate::geometry::{DiscretizedSurface, Scene, StackedNodes};
use crate::linalg::CMat;

/// Fills an m×n matrix column by column in parallel.
pub(crate) fn fill(m: usize, n: usize, entry: impl Fn(usize, usize) -> C64 + Sync) -> CMat {
    let mut a = Mat::<C64>::zeros(m, n);
    a.as_mut().par_col_chunks_mut(1).enumerate().for_each(|(j, mut col)| {
        for i in 0..m {
            col[(i, 0)] = entry(i, j);
        }
    });
    a
}

/// Exact self moments for every node of an analytic surface.
pub fn surface_moments(surface: &DiscretizedSurface, lambda: C64) -> Result<Vec<SelfMoments>> {
    let shape = surface
        .shape
        .as_ref()
        .ok_or_else(|| Error::InvalidSurface("singular quadrature needs an analytic surface".into()))?;
    if shape.is_sphere() {
        let m = self_moments(shape, &surface.preimages[0], lambda);
        let n0 = surface.normals[0];
        return Ok(surface.normals.iter().map(|n| m.moved_on_sphere(&n0, n)).collect());
    }
    Ok(surface.preimages.par_iter().map(|u| self_moments(shape, u, lambda)).collect())
}

/// Per-λ assembly context: scene geometry plus the singular moments at λ.
pub struct Assembler<'a> {
    pub scene: &'a Scene,
    pub lambda: C64,
    pub cav: StackedNodes,
    /// Cavity index of each stacked cavity node.
    pub cav_owner: Vec<usize>,
    pub outer_moments: Vec<SelfMoments>,
    pub cav_moments: Vec<SelfMoments>,
    outer_stencils: Vec<Stencil>,
    /// Per cavity, indices local to that cavity.
    cav_stencils: Vec<Vec<Stencil>>,
    cav_offsets: Vec<usize>,
}

impl<'a> Assembler<'a> {
    pub fn new(scene: &'a Scene, lambda: C64) -> Result<Self> {
        if !(lambda.re > 0.0) {
            return Err(Error::NonPositiveMu(lambda.re));
        }
        let cav = scene.cavity_nodes();
        let mut cav_owner = Vec::with_capacity(cav.nodes.len());
        let mut cav_moments = Vec::with_capacity(cav.nodes.len());
        for (j, c) in scene.cavities.iter().enumerate() {
            cav_owner.extend(std::iter::repeat(j).take(c.len()));
            cav_moments.extend(surface_moments(c, lambda)?);
        }
        Ok(Self {
            scene,
            lambda,
            cav,
            cav_owner,
            outer_moments: surface_moments(&scene.outer, lambda)?,
            cav_moments,
            outer_stencils: gradient_stencils(&scene.outer),
            cav_stencils: scene.cavities.iter().map(gradient_stencils).collect(),
            cav_offsets: scene.cavity_offsets(),
        })
    }

    pub fn n_outer(&self) -> usize {
        self.scene.outer.len()
    }

    pub fn n_cav(&self) -> usize {
        self.cav.nodes.len()
    }

    fn outer(&self) -> &DiscretizedSurface {
        &self.scene.outer
    }

    /// Y₁₁: ∂Ω → ∂Ω, kernel −∂_{ν_y}E(y, z).
    pub fn y11(&self) -> CMat {
        let o = self.outer();
        let lam = self.lambda;
        let mut a = fill(o.len(), o.len(), |i, j| {
            if i == j {
                C64::new(0.0, 0.0)
            } else {
                neumann_kernel(lam, &o.nodes[i], &o.normals[i], &o.nodes[j]) * o.weights[j]
            }
        });
        let (m0, m1) = self.outer_y11_moments(1.0);
        correct_self_block(&mut a, 0, 0, &o.nodes, &m0, &m1, &self.outer_stencils);
        a
    }

    /// Moments of the Y₁₁ kernel, times `sign`.
    fn outer_y11_moments(&self, sign: f64) -> (Vec<C64>, Vec<Vector3<C64>>) {
        let lam = self.lambda;
        let m = &self.outer_moments;
        (
            m.iter().map(|m| -(lam * m.h0 + m.h0r) * sign).collect(),
            m.iter().map(|m| (m.h01 * lam + m.h0r1) * C64::new(-sign, 0.0)).collect(),
        )
    }

    /// Moments of the Y₂₂ kernel split (λH₀ part, H₁ part) on cavity k, times `sign`.
    #[allow(clippy::type_complexity)]
    fn cav_moments_split(&self, k: usize, sign: f64) -> ((Vec<C64>, Vec<Vector3<C64>>), (Vec<C64>, Vec<Vector3<C64>>)) {
        let lam = self.lambda;
        let (lo, hi) = (self.cav_offsets[k], self.cav_offsets[k + 1]);
        let m = &self.cav_moments[lo..hi];
        let rho = self.scene.rho[k];
        (
            (m.iter().map(|m| lam * m.h0 * sign).collect(), m.iter().map(|m| m.h01 * (lam * sign)).collect()),
            (
                m.iter().map(|m| (m.h0r + m.e * rho) * sign).collect(),
                m.iter().map(|m| (m.h0r1 + m.e1 * C64::new(rho, 0.0)) * C64::new(sign, 0.0)).collect(),
            ),
        )
    }

    /// Y₁₂: ∂D → ∂Ω, kernel −∂_{ν_y}E(y, ζ).
    pub fn y12(&self) -> CMat {
        let o = self.outer();
        let c = &self.cav;
        let lam = self.lambda;
        fill(o.len(), c.nodes.len(), |i, j| neumann_kernel(lam, &o.nodes[i], &o.normals[i], &c.nodes[j]) * c.weights[j])
    }

    /// Y₂₁: ∂Ω → ∂D, kernel ∂_{ν_ξ}E(ξ, z) + ρE(ξ, z).
    pub fn y21(&self) -> CMat {
        let o = self.outer();
        let c = &self.cav;
        let lam = self.lambda;
        fill(c.nodes.len(), o.len(), |i, j| {
            let (a, b) = robin_parts(lam, &c.nodes[i], &c.normals[i], c.rho[i], &o.nodes[j]);
            (a + b) * o.weights[j]
        })
    }

    /// Y₂₂ split into its λH₀ part and its H₁ part, ∂D → ∂D.
    pub fn y22_parts(&self) -> (CMat, CMat) {
        let c = &self.cav;
        let n = c.nodes.len();
        let lam = self.lambda;
        let part = |which: usize| {
            fill(n, n, |i, j| {
                if i == j {
                    return C64::new(0.0, 0.0);
                }
                let (a, b) = robin_parts(lam, &c.nodes[i], &c.normals[i], c.rho[i], &c.nodes[j]);
                (if which == 0 { a } else { b }) * c.weights[j]
            })
        };
        let mut pa = part(0);
        let mut pb = part(1);
        for k in 0..self.scene.cavities.len() {
            let lo = self.cav_offsets[k];
            let nodes = &self.scene.cavities[k].nodes;
            let ((a0, a1), (b0, b1)) = self.cav_moments_split(k, 1.0);
            correct_self_block(&mut pa, lo, lo, nodes, &a0, &a1, &self.cav_stencils[k]);
            correct_self_block(&mut pb, lo, lo, nodes, &b0, &b1, &self.cav_stencils[k]);
        }
        (pa, pb)
    }

    pub fn y22(&self) -> CMat {
        let (a, b) = self.y22_parts();
        a + b
    }

    /// The density system [I−Y₁₁, −Y₁₂; −Y₂₁, I−Y₂₂].
    pub fn system_matrix(&self) -> CMat {
        let no = self.n_outer();
        let nc = self.n_cav();
        let o = self.outer();
        let c = &self.cav;
        let lam = self.lambda;
        let mut a = fill(no + nc, no + nc, |i, j| {
            if i == j {
                return C64::new(0.0, 0.0);
            }
            let k = match (i < no, j < no) {
                (true, true) => neumann_kernel(lam, &o.nodes[i], &o.normals[i], &o.nodes[j]) * o.weights[j],
                (true, false) => {
                    let j = j - no;
                    neumann_kernel(lam, &o.nodes[i], &o.normals[i], &c.nodes[j]) * c.weights[j]
                }
                (false, true) => {
                    let i = i - no;
                    let (x, y) = robin_parts(lam, &c.nodes[i], &c.normals[i], c.rho[i], &o.nodes[j]);
                    (x + y) * o.weights[j]
                }
                (false, false) => {
                    let (i, j) = (i - no, j - no);
                    let (x, y) = robin_parts(lam, &c.nodes[i], &c.normals[i], c.rho[i], &c.nodes[j]);
                    (x + y) * c.weights[j]
                }
            };
            -k
        });
        // Self blocks hold −K_ij w_j: correct with the negated moments, then add I.
        let (m0, m1) = self.outer_y11_moments(-1.0);
        correct_self_block(&mut a, 0, 0, &o.nodes, &m0, &m1, &self.outer_stencils);
        for k in 0..self.scene.cavities.len() {
            let lo = no + self.cav_offsets[k];
            let ((a0, a1), (b0, b1)) = self.cav_moments_split(k, -1.0);
            let m0: Vec<C64> = a0.iter().zip(&b0).map(|(x, y)| x + y).collect();
            let m1: Vec<Vector3<C64>> = a1.iter().zip(&b1).map(|(x, y)| x + y).collect();
            correct_self_block(&mut a, lo, lo, &self.scene.cavities[k].nodes, &m0, &m1, &self.cav_stencils[k]);
        }
        for i in 0..no + nc {
            a[(i, i)] += 1.0;
        }
        a
    }

    /// Single-layer potential of an outer density, evaluated on ∂Ω (singular).
    pub fn v_outer_on_outer(&self, phi: &[C64]) -> Vec<C64> {
        let o = self.outer();
        self_single_layer(
            &o.nodes,
            &o.weights,
            &self.outer_moments,
            &[0, o.len()],
            std::slice::from_ref(&self.outer_stencils),
            phi,
            self.lambda,
        )
    }

    /// Single-layer potential of an outer density, evaluated at arbitrary points off ∂Ω.
    pub fn v_outer_at(&self, phi: &[C64], points: &[Vector3<f64>]) -> Vec<C64> {
        let o = self.outer();
        plain_single_layer(&o.nodes, &o.weights, phi, points, self.lambda)
    }

    /// Single-layer potential of a cavity density, evaluated on the cavity nodes
    /// (singular on each cavity's own block).
    pub fn v_cav_on_cav(&self, psi: &[C64]) -> Vec<C64> {
        let c = &self.cav;
        self_single_layer(
            &c.nodes,
            &c.weights,
            &self.cav_moments,
            &self.cav_offsets,
            &self.cav_stencils,
            psi,
            self.lambda,
        )
    }

    pub fn v_cav_at(&self, psi: &[C64], points: &[Vector3<f64>]) -> Vec<C64> {
        let c = &self.cav;
        plain_single_layer(&c.nodes, &c.weights, psi, points, self.lambda)
    }
}

/// Single layer on its own nodes with the corrected rule on each surface and
/// plain sums across surfaces. `offsets` delimit the surfaces.
fn self_single_layer(
    nodes: &[Vector3<f64>],
    weights: &[f64],
    moments: &[SelfMoments],
    offsets: &[usize],
    stencils: &[Vec<Stencil>],
    f: &[C64],
    lambda: C64,
) -> Vec<C64> {
    let zero = C64::new(0.0, 0.0);
    (0..nodes.len())
        .into_par_iter()
        .map(|i| {
            let b = offsets.partition_point(|&o| o <= i) - 1;
            let (lo, hi) = (offsets[b], offsets[b + 1]);
            let mut acc = moments[i].e * f[i];
            let mut rv = Vector3::repeat(zero);
            for j in 0..nodes.len() {
                if j == i {
                    continue;
                }
                let d = nodes[j] - nodes[i];
                let k = e_kernel(lambda, d.norm()) * weights[j];
                if (lo..hi).contains(&j) {
                    acc += k * (f[j] - f[i]);
                    rv += Vector3::new(k * d.x, k * d.y, k * d.z);
                } else {
                    acc += k * f[j];
                }
            }
            let st = &stencils[b][i - lo];
            let (vx, vy) = st.project(&(moments[i].e1 - rv));
            for (k, c) in &st.coeffs {
                acc += (vx * c.x + vy * c.y) * (f[lo + k] - f[i]);
            }
            acc
        })
        .collect()
}

fn plain_single_layer(
    nodes: &[Vector3<f64>],
    weights: &[f64],
    f: &[C64],
    points: &[Vector3<f64>],
    lambda: C64,
) -> Vec<C64> {
    points
        .par_iter()
        .map(|x| nodes.iter().zip(weights).zip(f).map(|((y, w), v)| e_kernel(lambda, (x - y).norm()) * *w * v).sum())
        .collect()
}
