//! Synthetic data and the indicator I₀(λ, p).
//!
//! Densities solve the block system for w₀ = V_Ωφ + V_Dψ. The indicator is
//! evaluated two ways: on ∂D through the Robin kernel against w₀, and through
//! the resolvent representation with F⁽⁰⁾, F⁽¹⁾ integrated against φ alone.

pub mod flux;

use nalgebra::Vector3;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;

pub use flux::{laplace_flux, FluxKind, FluxModel};

use crate::bie::assembly::Assembler;
use crate::bie::kernels::{e_kernel, normal_derivative_kernel, robin_parts, INV_2PI};
use crate::bie::resolvent::ResolventSplit;
use crate::error::{Error, Result};
use crate::geometry::Scene;
use crate::linalg::{identity, matvec, sup_norm, CMat, Lu};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

#[derive(Debug, Clone, Serialize)]
pub struct DensitySolution {
    pub lambda: C64,
    pub phi: Vec<C64>,
    pub psi: Vec<C64>,
    /// The Neumann data the system was solved for.
    pub g: Vec<C64>,
    /// ‖Ax − b‖∞ / ‖b‖∞.
    pub residual: f64,
}

impl DensitySolution {
    /// ‖φ − g‖∞ / ‖g‖∞.
    pub fn phi_deviation(&self) -> f64 {
        let d: Vec<C64> = self.phi.iter().zip(&self.g).map(|(a, b)| a - b).collect();
        sup_norm(&d) / sup_norm(&self.g)
    }
}

/// Flux data g on ∂Ω at λ from the scene's flux model.
pub fn scene_flux(scene: &Scene, lambda: C64) -> Result<Vec<C64>> {
    laplace_flux(&scene.flux, lambda, &scene.outer.nodes, &scene.outer_center())
}

/// Solves [I−Y₁₁, −Y₁₂; −Y₂₁, I−Y₂₂](φ, ψ) = (g, 0) by dense LU.
pub fn solve_densities(scene: &Scene, lambda: C64, g: &[C64]) -> Result<DensitySolution> {
    let asm = Assembler::new(scene, lambda)?;
    solve_with(&asm, g)
}

pub fn solve_with(asm: &Assembler<'_>, g: &[C64]) -> Result<DensitySolution> {
    let no = asm.n_outer();
    if g.len() != no {
        return Err(Error::InvalidScene(format!("{} flux values for {no} outer nodes", g.len())));
    }
    if g.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::InvalidScene("flux data is not finite".into()));
    }
    let a = asm.system_matrix();
    let mut b = g.to_vec();
    b.resize(no + asm.n_cav(), ZERO);
    let lu = Lu::new(a.as_ref(), asm.lambda)?;
    let x = lu.solve(&b);
    let ax = matvec(a.as_ref(), &x);
    let r: Vec<C64> = ax.iter().zip(&b).map(|(u, v)| u - v).collect();
    let residual = sup_norm(&r) / sup_norm(&b).max(f64::MIN_POSITIVE);
    let (phi, psi) = x.split_at(no);
    Ok(DensitySolution { lambda: asm.lambda, phi: phi.to_vec(), psi: psi.to_vec(), g: g.to_vec(), residual })
}

/// Densities from the Neumann series x ← b + (I − A)x, kept as a cross-check of
/// the LU solve. Returns the iterate after `terms` steps.
pub fn solve_densities_neumann(asm: &Assembler<'_>, g: &[C64], terms: usize) -> Result<DensitySolution> {
    let no = asm.n_outer();
    let a = asm.system_matrix();
    let k = identity(a.nrows()) - &a;
    let mut b = g.to_vec();
    b.resize(no + asm.n_cav(), ZERO);
    let mut x = b.clone();
    for _ in 0..terms {
        let kx = matvec(k.as_ref(), &x);
        x = kx.iter().zip(&b).map(|(u, v)| u + v).collect();
    }
    let ax = matvec(a.as_ref(), &x);
    let r: Vec<C64> = ax.iter().zip(&b).map(|(u, v)| u - v).collect();
    let residual = sup_norm(&r) / sup_norm(&b).max(f64::MIN_POSITIVE);
    let (phi, psi) = x.split_at(no);
    Ok(DensitySolution { lambda: asm.lambda, phi: phi.to_vec(), psi: psi.to_vec(), g: g.to_vec(), residual })
}

/// w₀ = V_Ωφ + V_Dψ on the outer nodes.
pub fn w0_trace(asm: &Assembler<'_>, d: &DensitySolution) -> Vec<C64> {
    let mut w = asm.v_outer_on_outer(&d.phi);
    if asm.n_cav() > 0 {
        let v = asm.v_cav_at(&d.psi, &asm.scene.outer.nodes);
        for (a, b) in w.iter_mut().zip(v) {
            *a += b;
        }
    }
    w
}

/// w₀ on the stacked cavity nodes.
pub fn w0_on_cavities(asm: &Assembler<'_>, d: &DensitySolution) -> Vec<C64> {
    let mut w = asm.v_outer_at(&d.phi, &asm.cav.nodes);
    for (a, b) in w.iter_mut().zip(asm.v_cav_on_cav(&d.psi)) {
        *a += b;
    }
    w
}

/// k_p(ξ) = ∂_{ν_ξ}E(ξ, p) + ρE(ξ, p) on the stacked cavity nodes.
pub fn robin_probe_kernel(asm: &Assembler<'_>, p: &Vector3<f64>) -> Vec<C64> {
    let c = &asm.cav;
    (0..c.nodes.len())
        .map(|i| {
            let (a, b) = robin_parts(asm.lambda, &c.nodes[i], &c.normals[i], c.rho[i], p);
            a + b
        })
        .collect()
}

/// I₀ = ∫_{∂D} (∂_ν E(ξ, p) + ρE(ξ, p)) w₀(ξ) dS, the Green-identity transfer of
/// the ∂Ω integral onto the cavities. Exactly zero without cavities.
pub fn indicator_direct(asm: &Assembler<'_>, d: &DensitySolution, p: &Vector3<f64>) -> Result<C64> {
    asm.scene.check_probe(p)?;
    if asm.n_cav() == 0 {
        return Ok(ZERO);
    }
    let w0 = w0_on_cavities(asm, d);
    let k = robin_probe_kernel(asm, p);
    Ok(k.iter().zip(&w0).zip(&asm.cav.weights).map(|((k, w), q)| k * w * *q).sum())
}

/// I₀ = ∫_{∂Ω} (∂_ν E(y, p)w₀ − E(y, p)g) dS with ∂_νw₀ = g imposed. The two
/// terms are of size e^{−λ dist(p, ∂Ω)} while I₀ is of size e^{−λ l(p, D)}, so
/// this form is only usable at small μ.
pub fn indicator_outer_boundary(asm: &Assembler<'_>, d: &DensitySolution, p: &Vector3<f64>) -> Result<C64> {
    asm.scene.check_probe(p)?;
    let o = &asm.scene.outer;
    let w0 = w0_trace(asm, d);
    let mut acc = ZERO;
    for i in 0..o.len() {
        let dn = normal_derivative_kernel(asm.lambda, &o.nodes[i], p, &o.normals[i])?;
        let e = e_kernel(asm.lambda, (o.nodes[i] - p).norm());
        acc += (dn * w0[i] - e * d.g[i]) * o.weights[i];
    }
    Ok(acc)
}

/// f_p(ζ) = e^{−λ|ζ−p|}/|ζ−p| on the stacked cavity nodes.
pub fn probe_source(lambda: C64, nodes: &[Vector3<f64>], p: &Vector3<f64>) -> Vec<C64> {
    nodes
        .iter()
        .map(|z| {
            let r = (z - p).norm();
            (-lambda * r).exp() / r
        })
        .collect()
}

/// The transpose operators acting on cavity functions without forming them:
/// ᵗA x = W⁻¹Aᵀ(Wx) for a weighted Nyström matrix A.
pub struct TransposeAction {
    pub lambda: C64,
    weights: Vec<f64>,
    part0: CMat,
    part1: CMat,
    lu: Lu,
}

impl TransposeAction {
    pub fn new(asm: &Assembler<'_>) -> Result<Self> {
        let (part0, part1) = asm.y22_parts();
        let n = part0.nrows();
        let lhs = identity(n) - &part0 - &part1;
        let lu = Lu::new(lhs.as_ref(), asm.lambda)?;
        Ok(Self { lambda: asm.lambda, weights: asm.cav.weights.clone(), part0, part1, lu })
    }

    fn apply_t(&self, a: &CMat, x: &[C64]) -> Vec<C64> {
        let n = x.len();
        let wx: Vec<C64> = x.iter().zip(&self.weights).map(|(v, w)| v * *w).collect();
        let mut out = vec![ZERO; n];
        out.par_iter_mut().enumerate().for_each(|(j, o)| {
            let col = a.col(j);
            let mut s = ZERO;
            for i in 0..n {
                s += col[i] * wx[i];
            }
            *o = s / self.weights[j];
        });
        out
    }

    /// M⁽⁰⁾x: the λH₀ part of ᵗY₂₂.
    pub fn m0(&self, x: &[C64]) -> Vec<C64> {
        self.apply_t(&self.part0, x)
    }

    /// M̃x: the H₁ part of ᵗY₂₂.
    pub fn mtilde(&self, x: &[C64]) -> Vec<C64> {
        self.apply_t(&self.part1, x)
    }

    pub fn ty22(&self, x: &[C64]) -> Vec<C64> {
        add(&self.m0(x), &self.mtilde(x))
    }

    /// Mx = (I − ᵗY₂₂)⁻¹x − x, through a transposed solve with I − Y₂₂.
    pub fn m(&self, x: &[C64]) -> Vec<C64> {
        let wx: Vec<C64> = x.iter().zip(&self.weights).map(|(v, w)| v * *w).collect();
        let y = self.lu.solve_transpose(&wx);
        y.iter().zip(&self.weights).zip(x).map(|((v, w), xi)| v / *w - xi).collect()
    }

    /// M⁽¹⁾x = M̃x + ᵗY₂₂Mx.
    pub fn m1(&self, x: &[C64]) -> Vec<C64> {
        let mx = self.m(x);
        add(&self.mtilde(x), &self.ty22(&mx))
    }
}

fn add(a: &[C64], b: &[C64]) -> Vec<C64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

/// F⁽⁰⁾ and F⁽¹⁾ on the stacked cavity nodes.
pub struct FPair {
    pub f0: Vec<C64>,
    pub f1: Vec<C64>,
}

/// F⁽ᵏ⁾(ξ) = e^{λ|ξ−p|}(M⁽ᵏ⁾f_p)(ξ).
pub fn f_k(asm: &Assembler<'_>, ops: &TransposeAction, p: &Vector3<f64>) -> FPair {
    let lam = asm.lambda;
    let fp = probe_source(lam, &asm.cav.nodes, p);
    let scale = |v: Vec<C64>| -> Vec<C64> {
        v.iter().zip(&asm.cav.nodes).map(|(x, z)| x * (lam * (z - p).norm()).exp()).collect()
    };
    FPair { f0: scale(ops.m0(&fp)), f1: scale(ops.m1(&fp)) }
}

/// Block piece F⁽ᵏ⁾,ⁱʲ from dense resolvent matrices: rows on cavity i, the
/// source f_p restricted to cavity j.
pub fn f_k_block(
    asm: &Assembler<'_>,
    split: &ResolventSplit,
    p: &Vector3<f64>,
    k: usize,
    i: usize,
    j: usize,
) -> Vec<C64> {
    let offsets = asm.scene.cavity_offsets();
    let lam = asm.lambda;
    let fp = probe_source(lam, &asm.cav.nodes, p);
    let m = if k == 0 { &split.m0 } else { &split.m1 };
    let (ri, rj) = (offsets[i]..offsets[i + 1], offsets[j]..offsets[j + 1]);
    ri.map(|r| {
        let s: C64 = rj.clone().map(|c| m[(r, c)] * fp[c]).sum();
        s * (lam * (asm.cav.nodes[r] - p).norm()).exp()
    })
    .collect()
}

/// Which terms of G₀, G₁ enter the kernel route.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelTerms {
    Full,
    /// Keeps H⁺ and the H₁ pair, drops everything carrying F.
    LeadingOnly,
}

/// I₀ = λI₀₀ + I₀₁ with I₀ⱼ = (2π)⁻² ∫∫ e^{−λ l_p(ξ, y)} Gⱼ(ξ, y, p) dS_ξ φ(y) dS_y.
pub fn indicator_kernel_route(
    asm: &Assembler<'_>,
    fpair: &FPair,
    phi: &[C64],
    p: &Vector3<f64>,
    terms: KernelTerms,
) -> Result<C64> {
    asm.scene.check_probe(p)?;
    let lam = asm.lambda;
    let c = &asm.cav;
    let o = &asm.scene.outer;
    if c.nodes.is_empty() {
        return Ok(ZERO);
    }
    let keep_f = if terms == KernelTerms::Full { 2.0 } else { 0.0 };
    // Per-ξ quantities independent of y.
    let pre: Vec<_> = (0..c.nodes.len())
        .map(|i| {
            let xi = &c.nodes[i];
            let nu = &c.normals[i];
            let dp = p - xi;
            let rp = dp.norm();
            let h0p = nu.dot(&dp) / (rp * rp);
            let h1p = (h0p + c.rho[i]) / rp;
            let fsum = (fpair.f0[i] + fpair.f1[i]) * keep_f;
            (rp, h0p, h1p, fsum)
        })
        .collect();
    let total: C64 = (0..o.len())
        .into_par_iter()
        .map(|iy| {
            let y = &o.nodes[iy];
            let mut acc = ZERO;
            for i in 0..c.nodes.len() {
                let xi = &c.nodes[i];
                let (rp, h0p, h1p, fsum) = pre[i];
                let dy = y - xi;
                let ry = dy.norm();
                let h0y = c.normals[i].dot(&dy) / (ry * ry);
                let h1y = (h0y + c.rho[i]) / ry;
                let g0 = h0p / ry + h0y / rp + fsum * h0y;
                let g1 = h1p / ry + h1y / rp + fsum * h1y;
                acc += (-lam * (rp + ry)).exp() * (lam * g0 + g1) * c.weights[i];
            }
            acc * phi[iy] * o.weights[iy]
        })
        .sum();
    Ok(total * (INV_2PI * INV_2PI))
}

#[derive(Debug, Clone, Serialize)]
pub struct IndicatorValue {
    pub lambda: C64,
    pub p: [f64; 3],
    pub i0_direct: C64,
    pub i0_kernel: C64,
    /// |direct − kernel| / |direct|.
    pub route_residual: f64,
    pub density_residual: f64,
}

/// Full evaluation at one (λ, p): flux, densities and both indicator routes.
pub fn evaluate_indicator(scene: &Scene, lambda: C64, p: &Vector3<f64>) -> Result<IndicatorValue> {
    let g = scene_flux(scene, lambda)?;
    evaluate_indicator_with(scene, lambda, p, &g, true)
}

/// As [`evaluate_indicator`] with externally supplied flux data. Without the
/// kernel route its value and the route residual are NaN.
pub fn evaluate_indicator_with(
    scene: &Scene,
    lambda: C64,
    p: &Vector3<f64>,
    g: &[C64],
    kernel_route: bool,
) -> Result<IndicatorValue> {
    scene.check_probe(p)?;
    let asm = Assembler::new(scene, lambda)?;
    let d = solve_with(&asm, g)?;
    let direct = indicator_direct(&asm, &d, p)?;
    let kernel = if !kernel_route {
        C64::new(f64::NAN, f64::NAN)
    } else if asm.n_cav() == 0 {
        ZERO
    } else {
        let ops = TransposeAction::new(&asm)?;
        let fpair = f_k(&asm, &ops, p);
        indicator_kernel_route(&asm, &fpair, &d.phi, p, KernelTerms::Full)?
    };
    let route_residual = if direct.norm() > 0.0 { (direct - kernel).norm() / direct.norm() } else { kernel.norm() };
    Ok(IndicatorValue {
        lambda,
        p: [p.x, p.y, p.z],
        i0_direct: direct,
        i0_kernel: kernel,
        route_residual,
        density_residual: d.residual,
    })
}
