//! The Neumann resolvent M = ᵗY₂₂(I − ᵗY₂₂)⁻¹, its split M = M⁽⁰⁾ + M⁽¹⁾, and
//! the block decomposition by cavity used to separate self and cross
//! interactions.

use faer::Mat;
use num_complex::Complex64 as C64;

use super::assembly::Assembler;
use crate::error::Result;
use crate::geometry::Scene;
use crate::linalg::{identity, inf_norm, weighted_transpose, CMat, Lu};

/// ᵗY₂₂ and its parts: M⁰ (λH₀ kernel, = M⁽⁰⁾) and M̃ (H₁ kernel).
pub struct TransposeParts {
    pub ty22: CMat,
    pub m0: CMat,
    pub mtilde: CMat,
}

pub fn transpose_parts(asm: &Assembler<'_>) -> TransposeParts {
    let (a, b) = asm.y22_parts();
    let w = &asm.cav.weights;
    let m0 = weighted_transpose(a.as_ref(), w);
    let mtilde = weighted_transpose(b.as_ref(), w);
    let ty22 = &m0 + &mtilde;
    TransposeParts { ty22, m0, mtilde }
}

pub struct ResolventSplit {
    pub lambda: C64,
    pub ty22: CMat,
    pub m: CMat,
    pub m0: CMat,
    pub mtilde: CMat,
    /// M⁽¹⁾ = M̃ + ᵗY₂₂·M.
    pub m1: CMat,
    /// Power-iteration estimate of the spectral radius of ᵗY₂₂.
    pub spectral_radius: f64,
}

/// Dense resolvent and its split. Warns when the Neumann series would diverge.
pub fn resolvent_m(scene: &Scene, lambda: C64) -> Result<ResolventSplit> {
    let asm = Assembler::new(scene, lambda)?;
    resolvent_from(&asm)
}

pub fn resolvent_from(asm: &Assembler<'_>) -> Result<ResolventSplit> {
    let TransposeParts { ty22, m0, mtilde } = transpose_parts(asm);
    let n = ty22.nrows();
    let rho = spectral_radius(&ty22, 60);
    if rho >= 1.0 {
        log::warn!(
            "spectral radius estimate {rho:.3} of tY22 at λ = {}: Neumann series would not converge",
            asm.lambda
        );
    }
    let i = identity(n);
    let lhs = &i - &ty22;
    let lu = Lu::new(lhs.as_ref(), asm.lambda)?;
    let inv = lu.solve_mat(i.as_ref());
    let m = &inv - &i;
    let m1 = &mtilde + &ty22 * &m;
    Ok(ResolventSplit { lambda: asm.lambda, ty22, m, m0, mtilde, m1, spectral_radius: rho })
}

/// Largest |eigenvalue| estimate by power iteration.
pub fn spectral_radius(a: &CMat, iters: usize) -> f64 {
    let n = a.nrows();
    if n == 0 {
        return 0.0;
    }
    let mut v = Mat::<C64>::from_fn(n, 1, |i, _| C64::new(1.0 + 0.01 * (i % 7) as f64, 0.0));
    let mut est = 0.0;
    for _ in 0..iters {
        let w = a * &v;
        let nw = (0..n).map(|i| w[(i, 0)].norm_sqr()).sum::<f64>().sqrt();
        let nv = (0..n).map(|i| v[(i, 0)].norm_sqr()).sum::<f64>().sqrt();
        if nw == 0.0 {
            return 0.0;
        }
        est = nw / nv;
        v = Mat::from_fn(n, 1, |i, _| w[(i, 0)] / nw);
    }
    est
}

/// Block decomposition of ᵗY₂₂ by cavity: Y_D (diagonal blocks), the cross
/// part, W = I − (I − ᵗY₂₂)(I − Y_D)⁻¹ = Y_off(I + M_D), W∞ = W(I − W)⁻¹ and the
/// single-cavity resolvents M_{D_j}.
pub struct BlockSplit {
    pub offsets: Vec<usize>,
    pub y_d: CMat,
    pub y_off: CMat,
    /// Block-diagonal matrix holding every M_{D_j}.
    pub m_d: CMat,
    pub w: CMat,
    pub w_inf: CMat,
}

impl BlockSplit {
    pub fn m_dj(&self, j: usize) -> CMat {
        let (lo, hi) = (self.offsets[j], self.offsets[j + 1]);
        self.m_d.submatrix(lo, lo, hi - lo, hi - lo).to_owned()
    }

    /// M reassembled from the blocks: M_D + W∞ + M_D·W∞.
    pub fn m(&self) -> CMat {
        &self.m_d + &self.w_inf + &self.m_d * &self.w_inf
    }

    /// M^{jj} − M_{D_j} = (W∞ + M_D·W∞)^{jj}, formed without cancellation.
    pub fn diagonal_difference(&self, j: usize) -> CMat {
        let (lo, hi) = (self.offsets[j], self.offsets[j + 1]);
        let n = hi - lo;
        let mdj = self.m_dj(j);
        let winf_jj = self.w_inf.submatrix(lo, lo, n, n).to_owned();
        &winf_jj + &mdj * &winf_jj
    }
}

pub fn block_split_w(scene: &Scene, lambda: C64) -> Result<BlockSplit> {
    let asm = Assembler::new(scene, lambda)?;
    let parts = transpose_parts(&asm);
    block_split_from(scene, &parts.ty22, lambda)
}

pub fn block_split_from(scene: &Scene, ty22: &CMat, lambda: C64) -> Result<BlockSplit> {
    let offsets = scene.cavity_offsets();
    let n = ty22.nrows();
    let owner = |i: usize| offsets.partition_point(|&o| o <= i) - 1;
    let y_d = Mat::from_fn(n, n, |i, j| if owner(i) == owner(j) { ty22[(i, j)] } else { C64::new(0.0, 0.0) });
    let y_off = Mat::from_fn(n, n, |i, j| if owner(i) != owner(j) { ty22[(i, j)] } else { C64::new(0.0, 0.0) });
    let mut m_d = Mat::<C64>::zeros(n, n);
    for k in 0..scene.cavities.len() {
        let (lo, hi) = (offsets[k], offsets[k + 1]);
        let nk = hi - lo;
        let blk = y_d.submatrix(lo, lo, nk, nk);
        let ik = identity(nk);
        let lu = Lu::new((&ik - blk).as_ref(), lambda)?;
        let inv = lu.solve_mat(ik.as_ref());
        let mk = &inv - &ik;
        m_d.submatrix_mut(lo, lo, nk, nk).copy_from(&mk);
    }
    let i = identity(n);
    let w = &y_off * (&i + &m_d);
    let w_inf = if scene.cavities.len() < 2 {
        Mat::zeros(n, n)
    } else if inf_norm(w.as_ref()) < 0.5 {
        // W∞ = W + W² + …; keeps the tiny cross entries accurate to relative precision.
        let mut term = w.clone();
        let mut acc = w.clone();
        let base = inf_norm(w.as_ref());
        for _ in 0..200 {
            term = &term * &w;
            acc += &term;
            if inf_norm(term.as_ref()) <= 1e-18 * base {
                break;
            }
        }
        acc
    } else {
        let lu = Lu::new((&i - &w).as_ref(), lambda)?;
        let inv = lu.solve_mat(i.as_ref());
        &w * &inv
    };
    Ok(BlockSplit { offsets, y_d, y_off, m_d, w, w_inf })
}
