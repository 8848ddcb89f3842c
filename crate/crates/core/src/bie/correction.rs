//! Local corrections for the self blocks of the Nyström matrices.
//!
//! For a target node i the rule integrates K(x_i, ζ)f(ζ) as
//!   Σ_{j≠i} w_j K_ij (f_j − f_i − ∇f_i·(x_j − x_i)) + m₀ f_i + m₁·∇f_i,
//! with m₀, m₁ the exact zeroth and first moments of the kernel and ∇f_i the
//! tangential gradient from a quadratic least-squares fit over grid neighbours.
//! In matrix form this changes the diagonal and the stencil entries of row i.

use nalgebra::{DMatrix, Vector2, Vector3};
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::geometry::{tangent_frame, DiscretizedSurface};
use crate::linalg::CMat;

/// Gradient stencil at one node: ∇_t f ≈ e₁ Σ c_k.x (f_k − f_i) + e₂ Σ c_k.y (f_k − f_i).
#[derive(Debug, Clone)]
pub struct Stencil {
    pub e1: Vector3<f64>,
    pub e2: Vector3<f64>,
    /// Surface-local neighbour index and its weight pair.
    pub coeffs: Vec<(usize, Vector2<f64>)>,
}

impl Stencil {
    /// Frame components of a complex 3-vector.
    #[inline]
    pub fn project(&self, v: &Vector3<C64>) -> (C64, C64) {
        (v.x * self.e1.x + v.y * self.e1.y + v.z * self.e1.z, v.x * self.e2.x + v.y * self.e2.y + v.z * self.e2.z)
    }
}

/// Stencils over the (θ, φ) product grid: the 3×3 block of neighbouring rows and
/// columns, plus the nodes across the pole on the first and last rows.
pub fn gradient_stencils(surface: &DiscretizedSurface) -> Vec<Stencil> {
    let (nt, np) = surface.grid;
    let n = surface.len();
    if nt * np != n || nt < 2 || np < 4 {
        return vec![Stencil { e1: Vector3::x(), e2: Vector3::y(), coeffs: Vec::new() }; n];
    }
    (0..n)
        .into_par_iter()
        .map(|i| {
            let (it, ip) = (i / np, i % np);
            let mut nb: Vec<usize> = Vec::with_capacity(12);
            for dt in -1i64..=1 {
                let t = it as i64 + dt;
                if t < 0 || t >= nt as i64 {
                    continue;
                }
                for dp in -1i64..=1 {
                    let q = (ip as i64 + dp).rem_euclid(np as i64) as usize;
                    let k = t as usize * np + q;
                    if k != i {
                        nb.push(k);
                    }
                }
            }
            if it == 0 || it == nt - 1 {
                for dp in -1i64..=1 {
                    let q = (ip as i64 + (np / 2) as i64 + dp).rem_euclid(np as i64) as usize;
                    nb.push(it * np + q);
                }
            }
            let x = surface.nodes[i];
            let (e1, e2) = tangent_frame(&surface.normals[i]);
            let h = nb.iter().map(|&k| (surface.nodes[k] - x).norm()).fold(0.0, f64::max);
            // Quadratic fit in scaled tangent coordinates; rows of the
            // pseudo-inverse for the linear terms are the stencil weights.
            let a = DMatrix::from_fn(nb.len(), 5, |r, c| {
                let d = surface.nodes[nb[r]] - x;
                let (s1, s2) = (e1.dot(&d) / h, e2.dot(&d) / h);
                [s1, s2, s1 * s1, s1 * s2, s2 * s2][c]
            });
            let pinv = a.pseudo_inverse(1e-12).expect("pseudo-inverse of a small dense matrix");
            let coeffs =
                nb.iter().enumerate().map(|(r, &k)| (k, Vector2::new(pinv[(0, r)] / h, pinv[(1, r)] / h))).collect();
            Stencil { e1, e2, coeffs }
        })
        .collect()
}

/// Rewrites the diagonal and stencil entries of a self block in place.
///
/// Block rows `row0 + i` and columns `col0 + j` hold the node pair (i, j) of one
/// surface, off-diagonal entries already set to K_ij w_j. `m0`, `m1` are the
/// exact moments of the same kernel at each node.
pub fn correct_self_block(
    a: &mut CMat,
    row0: usize,
    col0: usize,
    nodes: &[Vector3<f64>],
    m0: &[C64],
    m1: &[Vector3<C64>],
    stencils: &[Stencil],
) {
    let n = nodes.len();
    let zero = C64::new(0.0, 0.0);
    let mut rs = vec![zero; n];
    let mut rv = vec![Vector3::repeat(zero); n];
    for j in 0..n {
        let col = a.col(col0 + j);
        for i in 0..n {
            if i != j {
                let v = col[row0 + i];
                let d = nodes[j] - nodes[i];
                rs[i] += v;
                rv[i] += Vector3::new(v * d.x, v * d.y, v * d.z);
            }
        }
    }
    for i in 0..n {
        let mut diag = m0[i] - rs[i];
        let st = &stencils[i];
        let (vx, vy) = st.project(&(m1[i] - rv[i]));
        for (k, c) in &st.coeffs {
            let w = vx * c.x + vy * c.y;
            a[(row0 + i, col0 + k)] += w;
            diag -= w;
        }
        a[(row0 + i, col0 + i)] = diag;
    }
}
